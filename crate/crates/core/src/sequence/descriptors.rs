//! Hand-crafted patch descriptors on a regular grid.
//!
//! Layout per grid point: per-channel mean, per-channel standard deviation
//! (doubled so it spans [0, 1]), then an 8-bin histogram of gradient
//! orientation weighted by magnitude and normalised by patch area.

use std::f64::consts::TAU;

use super::PropagationParams;
use crate::raster::{LabelMask, RasterImage};

pub const GRADIENT_BINS: usize = 8;

/// Grid coordinates along one axis: `stride/2, stride/2 + stride, ...`.
pub fn grid_points(extent: usize, stride: usize) -> Vec<usize> {
    let pts: Vec<usize> = (stride / 2..extent).step_by(stride.max(1)).collect();
    if pts.is_empty() {
        vec![(extent - 1) / 2]
    } else {
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub width: usize,
    pub height: usize,
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub dim: usize,
    /// Row-major over the grid, `dim` values per point.
    pub values: Vec<f64>,
    /// Mask label at each grid point, when a mask was supplied.
    pub labels: Option<Vec<u16>>,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn descriptor(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Pixel position of grid point `i`.
    pub fn point(&self, i: usize) -> (usize, usize) {
        (self.xs[i % self.xs.len()], self.ys[i / self.xs.len()])
    }
}

/// Per-pixel inputs to the descriptors of one frame, so a descriptor can be
/// computed at any pixel, not only on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatures {
    width: usize,
    height: usize,
    channels: usize,
    /// Samples scaled to [0, 1], interleaved.
    values: Vec<f64>,
    magnitude: Vec<f64>,
    /// Orientation bin; meaningful only where `magnitude > 0`.
    bin: Vec<u8>,
}

impl PatchFeatures {
    pub fn new(frame: &RasterImage) -> Self {
        let (w, h) = frame.dims();
        let c = frame.channels();
        let values = frame.normalized();
        let intensity: Vec<f64> = values.chunks_exact(c).map(|px| px.iter().sum::<f64>() / c as f64).collect();
        let at = |x: usize, y: usize| intensity[y * w + x];

        // Central differences, one-sided at the border.
        let mut magnitude = vec![0.0; w * h];
        let mut bin = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let (x0, x1) = (x.saturating_sub(1), (x + 1).min(w - 1));
                let (y0, y1) = (y.saturating_sub(1), (y + 1).min(h - 1));
                let gx = if x1 > x0 { (at(x1, y) - at(x0, y)) / (x1 - x0) as f64 } else { 0.0 };
                let gy = if y1 > y0 { (at(x, y1) - at(x, y0)) / (y1 - y0) as f64 } else { 0.0 };
                let mag = gx.hypot(gy);
                let p = y * w + x;
                magnitude[p] = mag;
                if mag > 0.0 {
                    let angle = gy.atan2(gx).rem_euclid(TAU);
                    bin[p] = ((angle / TAU * GRADIENT_BINS as f64) as usize).min(GRADIENT_BINS - 1) as u8;
                }
            }
        }
        PatchFeatures {
            width: w,
            height: h,
            channels: c,
            values,
            magnitude,
            bin,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Descriptor length.
    pub fn dim(&self) -> usize {
        2 * self.channels + GRADIENT_BINS
    }

    /// Appends the descriptor of the `patch_size` window centred on
    /// `(cx, cy)`, clipped to the frame.
    pub fn describe(&self, cx: usize, cy: usize, patch_size: usize, out: &mut Vec<f64>) {
        let (w, h, c) = (self.width, self.height, self.channels);
        let r = patch_size / 2;
        let (xa, xb) = (cx.saturating_sub(r), (cx + r).min(w - 1));
        let (ya, yb) = (cy.saturating_sub(r), (cy + r).min(h - 1));
        let area = ((xb - xa + 1) * (yb - ya + 1)) as f64;
        let base = out.len();
        out.resize(base + self.dim(), 0.0);
        for k in 0..c {
            // Accumulate relative to the first sample so constant patches
            // give exactly that value and zero spread.
            let shift = self.values[(ya * w + xa) * c + k];
            let (mut sum, mut sum2) = (0.0, 0.0);
            for y in ya..=yb {
                for x in xa..=xb {
                    let v = self.values[(y * w + x) * c + k] - shift;
                    sum += v;
                    sum2 += v * v;
                }
            }
            let mean = sum / area;
            out[base + k] = shift + mean;
            out[base + c + k] = (2.0 * (sum2 / area - mean * mean).max(0.0).sqrt()).min(1.0);
        }
        let mut hist = [0.0; GRADIENT_BINS];
        for y in ya..=yb {
            for x in xa..=xb {
                let p = y * w + x;
                if self.magnitude[p] > 0.0 {
                    hist[self.bin[p] as usize] += self.magnitude[p];
                }
            }
        }
        for (slot, v) in out[base + 2 * c..].iter_mut().zip(hist) {
            *slot = (v / area).clamp(0.0, 1.0);
        }
    }
}

pub fn extract_descriptors(frame: &RasterImage, mask: Option<&LabelMask>, params: &PropagationParams) -> DescriptorSet {
    grid_descriptors(&PatchFeatures::new(frame), mask, params)
}

/// Descriptors at every grid point of an already analysed frame.
pub fn grid_descriptors(features: &PatchFeatures, mask: Option<&LabelMask>, params: &PropagationParams) -> DescriptorSet {
    let (w, h) = features.dims();
    let xs = grid_points(w, params.grid_stride);
    let ys = grid_points(h, params.grid_stride);
    let dim = features.dim();
    let mut values = Vec::with_capacity(xs.len() * ys.len() * dim);
    for &gy in &ys {
        for &gx in &xs {
            features.describe(gx, gy, params.patch_size, &mut values);
        }
    }
    let labels = mask.map(|m| ys.iter().flat_map(|&y| xs.iter().map(move |&x| m.get(x, y))).collect());
    DescriptorSet {
        width: w,
        height: h,
        xs,
        ys,
        dim,
        values,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(stride: usize) -> PropagationParams {
        PropagationParams {
            grid_stride: stride,
            ..Default::default()
        }
    }

    #[test]
    fn constant_frame_descriptors_identical() {
        let img = RasterImage::from_fn_u8(20, 12, 3, |_, _| vec![10, 200, 90]).unwrap();
        let d = extract_descriptors(&img, None, &params(4));
        let first = d.descriptor(0).to_vec();
        for i in 0..d.len() {
            assert_eq!(d.descriptor(i), &first[..]);
        }
        assert_eq!(&first[3..6], &[0.0, 0.0, 0.0]);
        assert!(first[6..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sixty_four_grid_points() {
        let img = RasterImage::from_fn_u8(64, 64, 1, |x, y| vec![(x * y) as u8]).unwrap();
        let d = extract_descriptors(&img, None, &params(8));
        assert_eq!(d.len(), 64);
        assert_eq!(d.xs, vec![4, 12, 20, 28, 36, 44, 52, 60]);
        assert!(d.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn labels_sampled_at_grid_points() {
        let img = RasterImage::from_fn_u8(8, 8, 1, |_, _| vec![0]).unwrap();
        let mask = LabelMask::new(8, 8, (0..64).map(|i| (i % 8 >= 4) as u16).collect()).unwrap();
        let d = extract_descriptors(&img, Some(&mask), &params(4));
        assert_eq!(d.labels.unwrap(), vec![0, 1, 0, 1]);
    }

    /// Shifting the frame by one pixel moves each patch mean by at most the
    /// largest intensity step inside the patch (computed directly here).
    #[test]
    fn small_shift_stability() {
        let f = |x: usize, y: usize| ((x * 13 + y * 7) % 50 + 100) as u8;
        let a = RasterImage::from_fn_u8(32, 32, 1, |x, y| vec![f(x, y)]).unwrap();
        let b = RasterImage::from_fn_u8(32, 32, 1, |x, y| vec![f(x + 1, y)]).unwrap();
        let p = params(4);
        let (da, db) = (extract_descriptors(&a, None, &p), extract_descriptors(&b, None, &p));
        for i in 0..da.len() {
            let (gx, gy) = da.point(i);
            let r = p.patch_size / 2;
            let mut max_step = 0.0f64;
            for y in gy.saturating_sub(r)..=(gy + r).min(31) {
                for x in gx.saturating_sub(r)..=(gx + r).min(31) {
                    max_step = max_step.max((f(x + 1, y) as f64 - f(x, y) as f64).abs() / 255.0);
                }
            }
            assert!((da.descriptor(i)[0] - db.descriptor(i)[0]).abs() <= max_step + 1e-12);
        }
    }
}
