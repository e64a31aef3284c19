//! Large-image grid patching. Images taller or wider than
//! [`GRID_THRESHOLD`] are annotated as overlapping square patches and the
//! patch masks stitched back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMask, RasterImage};

pub const GRID_THRESHOLD: usize = 2000;
pub const DEFAULT_PATCH_SIZE: usize = 1024;
pub const DEFAULT_OVERLAP: usize = 128;

pub fn needs_grid(width: usize, height: usize) -> bool {
    width > GRID_THRESHOLD || height > GRID_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub patch_size: usize,
    pub overlap: usize,
    pub width: usize,
    pub height: usize,
    /// Top-left corners, row-major.
    pub origins: Vec<(usize, usize)>,
}

fn axis_origins(extent: usize, patch: usize, overlap: usize) -> Vec<usize> {
    if extent <= patch {
        return vec![0];
    }
    let step = patch - overlap;
    let count = (extent - overlap).div_ceil(step).max(1);
    (0..count).map(|i| (i * step).min(extent - patch)).collect()
}

impl GridLayout {
    pub fn new(width: usize, height: usize, patch_size: usize, overlap: usize) -> Result<Self> {
        if patch_size == 0 || overlap >= patch_size {
            return Err(Error::invalid(
                "grid",
                format!("patch size {patch_size} must exceed overlap {overlap}"),
            ));
        }
        let xs = axis_origins(width, patch_size, overlap);
        let ys = axis_origins(height, patch_size, overlap);
        let origins = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
        Ok(GridLayout {
            patch_size,
            overlap,
            width,
            height,
            origins,
        })
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// `(x, y, w, h)` of patch `i`; patches are clipped to small images.
    pub fn patch_rect(&self, i: usize) -> (usize, usize, usize, usize) {
        let (x, y) = self.origins[i];
        (x, y, self.patch_size.min(self.width), self.patch_size.min(self.height))
    }
}

pub fn grid_split(image: &RasterImage, patch_size: usize, overlap: usize) -> Result<(Vec<RasterImage>, GridLayout)> {
    let layout = GridLayout::new(image.width(), image.height(), patch_size, overlap)?;
    let patches = (0..layout.len())
        .map(|i| {
            let (x, y, w, h) = layout.patch_rect(i);
            image.crop(x, y, w, h)
        })
        .collect::<Result<_>>()?;
    Ok((patches, layout))
}

/// Reassembles patch masks given in layout order. A pixel keeps the first
/// nonzero label any patch assigns to it.
pub fn grid_stitch(masks: &[LabelMask], layout: &GridLayout) -> Result<LabelMask> {
    if masks.len() != layout.len() {
        return Err(Error::invalid(
            "grid stitch",
            format!("{} masks for a {}-patch layout", masks.len(), layout.len()),
        ));
    }
    let mut out = LabelMask::zeros(layout.width, layout.height);
    for (i, mask) in masks.iter().enumerate() {
        let (x0, y0, w, h) = layout.patch_rect(i);
        if mask.dims() != (w, h) {
            return Err(Error::DimensionMismatch {
                expected: (w, h),
                actual: mask.dims(),
            });
        }
        for y in 0..h {
            for x in 0..w {
                let label = mask.get(x, y);
                if label != 0 && out.get(x0 + x, y0 + y) == 0 {
                    out.set(x0 + x, y0 + y, label);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let l = GridLayout::new(4096, 3000, 1024, 128).unwrap();
        assert_eq!(l.len(), 20);
        assert_eq!(l.origins[4], (4096 - 1024, 0));
        assert_eq!(l.origins[19], (3072, 3000 - 1024));
        assert_eq!(GridLayout::new(800, 600, 1024, 128).unwrap().origins, vec![(0, 0)]);
        assert_eq!(GridLayout::new(1025, 1024, 1024, 128).unwrap().origins, vec![(0, 0), (1, 0)]);
        assert!(GridLayout::new(10, 10, 8, 8).is_err());
    }

    /// Every pixel must fall in some patch; neighbours overlap by exactly
    /// `overlap` unless the last one was clamped.
    #[test]
    fn patches_cover_and_overlap() {
        for &(w, h) in &[(4096, 3000), (2001, 5000), (3968, 1024)] {
            let l = GridLayout::new(w, h, 1024, 128).unwrap();
            let mut xs: Vec<usize> = l.origins.iter().map(|o| o.0).collect();
            xs.dedup();
            xs.sort_unstable();
            xs.dedup();
            assert_eq!(xs[0], 0);
            assert_eq!(*xs.last().unwrap() + 1024, w);
            for pair in xs.windows(2) {
                let overlap = pair[0] + 1024 - pair[1];
                assert!(overlap >= 128, "gap between {pair:?}");
            }
            for pair in xs[..xs.len() - 1].windows(2) {
                assert_eq!(pair[0] + 1024 - pair[1], 128);
            }
        }
    }

    #[test]
    fn stitch_keeps_earlier_label() {
        let l = GridLayout::new(6, 4, 4, 2).unwrap();
        assert_eq!(l.origins, vec![(0, 0), (2, 0)]);
        let a = LabelMask::new(4, 4, vec![1; 16]).unwrap();
        let b = LabelMask::new(4, 4, vec![2; 16]).unwrap();
        let out = grid_stitch(&[a, b], &l).unwrap();
        assert_eq!(out.get(3, 0), 1);
        assert_eq!(out.get(4, 0), 2);
        let bad = LabelMask::zeros(3, 3);
        assert!(grid_stitch(&[bad.clone(), bad], &l).is_err());
    }

    #[test]
    fn split_then_stitch_is_identity() {
        let img = RasterImage::from_fn_u8(37, 23, 1, |x, y| vec![(x * 7 + y) as u8]).unwrap();
        let (patches, layout) = grid_split(&img, 16, 4).unwrap();
        let masks: Vec<LabelMask> = patches
            .iter()
            .map(|p| LabelMask::new(p.width(), p.height(), p.samples().to_vec()).unwrap())
            .collect();
        let full = grid_stitch(&masks, &layout).unwrap();
        assert_eq!(full.labels(), img.samples());
    }
}
