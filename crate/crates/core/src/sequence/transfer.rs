//! Label transfer from a memory of annotated frames to a new frame.
//!
//! Every target grid point is matched to its `knn` cheapest memory grid
//! points within the search window. Cost is the squared descriptor
//! distance plus `spatial_weight` times the squared displacement. Each
//! match is then moved to the cheapest pixel within half a grid step of
//! it, so motion that is not a multiple of the stride is tracked instead of
//! rounded (and, over a chain of frames, accumulated).
//!
//! Every target grid point within half a patch of a pixel votes for it
//! (the nearest grid point alone when none is that close). A voter at `p`
//! contributes, from each of its matches `q`, the memory mask label at
//! `q + (pixel - p)`, weighted by `exp(-(cost - floor) / h)`. `floor` is
//! the lowest best-match cost among the voters and `h` the mean best-match
//! cost over the frame.

use rayon::prelude::*;

use super::descriptors::{grid_descriptors, DescriptorSet, PatchFeatures};
use super::PropagationParams;
use crate::engines::graphcut::CutProblem;
use crate::engines::ScaledImage;
use crate::error::{Error, Result};
use crate::raster::{LabelMask, RasterImage};

/// Floor on the bandwidth so a frame of perfect matches stays finite.
const MIN_BANDWIDTH: f64 = 1e-12;
const REFINE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryFrame {
    pub frame_index: usize,
    pub descriptors: DescriptorSet,
    pub mask: LabelMask,
    pub features: PatchFeatures,
}

impl MemoryFrame {
    pub fn new(frame_index: usize, frame: &RasterImage, mask: LabelMask, params: &PropagationParams) -> Result<Self> {
        if frame.dims() != mask.dims() {
            return Err(Error::DimensionMismatch {
                expected: frame.dims(),
                actual: mask.dims(),
            });
        }
        let features = PatchFeatures::new(frame);
        let descriptors = grid_descriptors(&features, Some(&mask), params);
        Ok(MemoryFrame {
            frame_index,
            descriptors,
            mask,
            features,
        })
    }
}

/// The reference frame plus a rolling window of recently propagated frames.
#[derive(Debug, Clone)]
pub struct MemoryBank {
    reference: MemoryFrame,
    recent: Vec<MemoryFrame>,
    capacity: usize,
}

impl MemoryBank {
    pub fn new(reference: MemoryFrame, capacity: usize) -> Self {
        MemoryBank {
            reference,
            recent: Vec::new(),
            capacity,
        }
    }

    /// Adds a frame, evicting the oldest propagated frame when full.
    pub fn push(&mut self, frame: MemoryFrame) {
        if self.capacity == 0 {
            return;
        }
        if self.recent.len() == self.capacity {
            self.recent.remove(0);
        }
        self.recent.push(frame);
    }

    pub fn frames(&self) -> impl Iterator<Item = &MemoryFrame> {
        std::iter::once(&self.reference).chain(&self.recent)
    }

    pub fn len(&self) -> usize {
        1 + self.recent.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total descriptor items across frames.
    pub fn item_count(&self) -> usize {
        self.frames().map(|f| f.descriptors.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Transfer {
    pub mask: LabelMask,
    /// Share of the vote won by each pixel's label; 0 where nothing matched.
    pub confidence: Vec<f64>,
    pub descriptors: DescriptorSet,
    pub features: PatchFeatures,
}

#[derive(Debug, Clone, Copy)]
struct Match {
    cost: f64,
    frame: usize,
    x: usize,
    y: usize,
}

fn nearest_index(points: &[usize], v: usize) -> usize {
    let mut best = 0;
    for (i, &p) in points.iter().enumerate() {
        if p.abs_diff(v) < points[best].abs_diff(v) {
            best = i;
        }
    }
    best
}

pub fn transfer_labels(target: &RasterImage, memory: &MemoryBank, params: &PropagationParams) -> Result<Transfer> {
    params.validate()?;
    let dims = target.dims();
    let frames: Vec<&MemoryFrame> = memory.frames().collect();
    for f in &frames {
        if f.mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: f.mask.dims(),
            });
        }
    }
    let features = PatchFeatures::new(target);
    let desc = grid_descriptors(&features, None, params);
    let (cols, rows) = (desc.xs.len(), desc.ys.len());
    let window = params.search_window;

    let matches: Vec<Vec<Match>> = (0..desc.len())
        .into_par_iter()
        .map(|i| {
            let (px, py) = desc.point(i);
            let d = desc.descriptor(i);
            let cost_at = |qx: usize, qy: usize, q: &[f64]| {
                let d2: f64 = d.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                let s2 = (qx.abs_diff(px).pow(2) + qy.abs_diff(py).pow(2)) as f64;
                d2 + params.spatial_weight * s2
            };
            let mut best: Vec<Match> = Vec::with_capacity(params.knn + 1);
            for (fi, f) in frames.iter().enumerate() {
                let md = &f.descriptors;
                for (row, &qy) in md.ys.iter().enumerate() {
                    if qy.abs_diff(py) > window {
                        continue;
                    }
                    for (col, &qx) in md.xs.iter().enumerate() {
                        if qx.abs_diff(px) > window {
                            continue;
                        }
                        let cost = cost_at(qx, qy, md.descriptor(row * md.xs.len() + col));
                        if best.len() < params.knn || cost < best.last().expect("nonempty").cost {
                            let at = best.partition_point(|m| m.cost <= cost);
                            best.insert(at, Match { cost, frame: fi, x: qx, y: qy });
                            best.truncate(params.knn);
                        }
                    }
                }
            }
            refine_matches(&mut best, |fi, x, y, scratch: &mut Vec<f64>| {
                if x.abs_diff(px) > window || y.abs_diff(py) > window {
                    return f64::INFINITY;
                }
                scratch.clear();
                frames[fi].features.describe(x, y, params.patch_size, scratch);
                cost_at(x, y, scratch)
            }, params.grid_stride / 2, dims);
            best
        })
        .collect();

    let matched: Vec<f64> = matches.iter().filter_map(|m| m.first().map(|b| b.cost)).collect();
    let h = if matched.is_empty() {
        MIN_BANDWIDTH
    } else {
        (matched.iter().sum::<f64>() / matched.len() as f64).max(MIN_BANDWIDTH)
    };

    let (w, hgt) = dims;
    // Grid indices voting for each pixel column / row: every point whose
    // patch covers it, or the nearest point when none does.
    let reach = params.patch_size / 2;
    let near = |points: &[usize], v: usize| -> Vec<usize> {
        let within: Vec<usize> = (0..points.len()).filter(|&i| points[i].abs_diff(v) <= reach).collect();
        if within.is_empty() {
            vec![nearest_index(points, v)]
        } else {
            within
        }
    };
    let cols_of: Vec<Vec<usize>> = (0..w).map(|x| near(&desc.xs, x)).collect();
    let rows_of: Vec<Vec<usize>> = (0..hgt).map(|y| near(&desc.ys, y)).collect();

    // Per pixel: label vote shares. Weights are shifted by the cheapest
    // contributing cost, which rescales all of a pixel's votes equally and
    // avoids underflow when h is tiny.
    let pixels: Vec<(u16, f64, f64)> = (0..w * hgt)
        .into_par_iter()
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let voters = || {
                rows_of[y]
                    .iter()
                    .flat_map(|&r| cols_of[x].iter().map(move |&c| r * cols + c))
            };
            let Some(floor) = voters().filter_map(|gi| matches[gi].first().map(|m| m.cost)).reduce(f64::min) else {
                return (0, 0.0, 0.0);
            };
            let mut votes: Vec<(u16, f64)> = Vec::with_capacity(4);
            for gi in voters() {
                let (px, py) = desc.point(gi);
                for m in &matches[gi] {
                    let sx = (x as i64 + m.x as i64 - px as i64).clamp(0, w as i64 - 1) as usize;
                    let sy = (y as i64 + m.y as i64 - py as i64).clamp(0, hgt as i64 - 1) as usize;
                    let label = frames[m.frame].mask.get(sx, sy);
                    let weight = (-(m.cost - floor) / h).exp();
                    match votes.iter_mut().find(|v| v.0 == label) {
                        Some(v) => v.1 += weight,
                        None => votes.push((label, weight)),
                    }
                }
            }
            let total: f64 = votes.iter().map(|v| v.1).sum();
            let (label, top) = votes
                .iter()
                .copied()
                .reduce(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
                .expect("at least one vote");
            let fg_share = votes.iter().filter(|v| v.0 == 1).map(|v| v.1).sum::<f64>() / total;
            (label, top / total, fg_share)
        })
        .collect();
    debug_assert_eq!(rows * cols, desc.len());

    let mut labels: Vec<u16> = pixels.iter().map(|p| p.0).collect();
    let mut confidence: Vec<f64> = pixels.iter().map(|p| p.1).collect();

    let binary = frames.iter().all(|f| f.mask.max_label() <= 1);
    if params.refine_with_graphcut && binary {
        let fg_share: Vec<f64> = pixels.iter().map(|p| p.2).collect();
        let refined = refine(target, &fg_share, params.refine_lambda);
        for (p, &fg) in refined.iter().enumerate() {
            labels[p] = u16::from(fg);
            confidence[p] = if fg { fg_share[p] } else { 1.0 - fg_share[p] };
        }
    }

    Ok(Transfer {
        mask: LabelMask::new(w, hgt, labels)?,
        confidence,
        descriptors: desc,
        features,
    })
}

/// Moves each match to the cheapest position within `radius` pixels of it
/// (per axis), then re-sorts by cost and drops matches that landed on the
/// same memory pixel. Ties keep the earlier position, so an exact match
/// never moves.
fn refine_matches(
    matches: &mut Vec<Match>,
    cost: impl Fn(usize, usize, usize, &mut Vec<f64>) -> f64,
    radius: usize,
    (w, h): (usize, usize),
) {
    if radius == 0 {
        return;
    }
    let mut scratch = Vec::new();
    for m in matches.iter_mut() {
        let (x0, y0) = (m.x, m.y);
        for y in y0.saturating_sub(radius)..=(y0 + radius).min(h - 1) {
            for x in x0.saturating_sub(radius)..=(x0 + radius).min(w - 1) {
                if (x, y) == (x0, y0) {
                    continue;
                }
                let c = cost(m.frame, x, y, &mut scratch);
                if c < m.cost {
                    *m = Match { cost: c, x, y, ..*m };
                }
            }
        }
    }
    matches.sort_by(|a, b| a.cost.total_cmp(&b.cost));
    let mut seen: Vec<(usize, usize, usize)> = Vec::with_capacity(matches.len());
    matches.retain(|m| {
        let key = (m.frame, m.x, m.y);
        let fresh = !seen.contains(&key);
        seen.push(key);
        fresh
    });
}

/// Binary graph cut with vote shares as unaries and 4-neighbour contrast
/// terms.
fn refine(image: &RasterImage, fg_share: &[f64], lambda: f64) -> Vec<bool> {
    let (w, h) = image.dims();
    let scaled = ScaledImage::new(image);
    let mut pairs = Vec::with_capacity(2 * w * h);
    for y in 0..h {
        for x in 0..w {
            let p = y * w + x;
            if x + 1 < w {
                pairs.push((p, p + 1));
            }
            if y + 1 < h {
                pairs.push((p, p + w));
            }
        }
    }
    let sigma2 = if pairs.is_empty() {
        1.0
    } else {
        (pairs.iter().map(|&(p, q)| scaled.dist2(p, q)).sum::<f64>() / pairs.len() as f64).max(1e-6)
    };
    let problem = CutProblem {
        width: w,
        height: h,
        source_caps: fg_share.iter().map(|&s| -(1.0 - s).max(REFINE_EPS).ln()).collect(),
        sink_caps: fg_share.iter().map(|&s| -s.max(REFINE_EPS).ln()).collect(),
        edges: pairs
            .iter()
            .map(|&(p, q)| (p as u32, q as u32, lambda * (-scaled.dist2(p, q) / (2.0 * sigma2)).exp()))
            .collect(),
    };
    problem.solve().0.data().to_vec()
}
