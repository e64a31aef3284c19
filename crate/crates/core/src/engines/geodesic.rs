//! Geodesic segmentation: each pixel goes to whichever seed set is closer
//! under a contrast-weighted path length.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::seeds::Seeds;
use super::{pair_prior, EngineOutput, EngineParams, ScaledImage};
use crate::raster::{BinaryMask, EdgeMap, RasterImage};

const NEIGHBOURS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

pub fn segment_with_seeds(params: &EngineParams, image: &RasterImage, seeds: &Seeds, prior: &EdgeMap) -> EngineOutput {
    let metric = GeodesicMetric::new(params, image, prior);
    let d_pos = metric.distances(&seeds.positive);
    let d_neg = metric.distances(&seeds.negative);
    let confidence = d_pos
        .iter()
        .zip(&d_neg)
        .map(|(&dp, &dn)| confidence(dp, dn))
        .collect();
    let (w, h) = image.dims();
    EngineOutput::from_confidence(w, h, confidence)
}

fn confidence(d_pos: f64, d_neg: f64) -> f64 {
    match (d_pos.is_finite(), d_neg.is_finite()) {
        (true, false) => 1.0,
        (false, true) => 0.0,
        (false, false) => 0.0,
        (true, true) => {
            let total = d_pos + d_neg;
            if total == 0.0 {
                1.0
            } else {
                d_neg / total
            }
        }
    }
}

/// Edge costs of the 8-neighbour pixel graph.
pub struct GeodesicMetric<'a> {
    scaled: ScaledImage,
    prior: &'a EdgeMap,
    contrast: f64,
    prior_weight: f64,
}

impl<'a> GeodesicMetric<'a> {
    pub fn new(params: &EngineParams, image: &RasterImage, prior: &'a EdgeMap) -> Self {
        GeodesicMetric {
            scaled: ScaledImage::new(image),
            prior,
            contrast: params.geodesic_contrast,
            prior_weight: params.edge_prior_weight,
        }
    }

    /// Cost of stepping between neighbouring pixels `p` and `q`.
    pub fn edge_cost(&self, p: usize, q: usize, diagonal: bool) -> f64 {
        let spatial = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
        let colour = self.scaled.dist2(p, q).sqrt();
        spatial * (1.0 + self.contrast * colour) * (1.0 + self.prior_weight * pair_prior(self.prior, p, q))
    }

    /// Multi-source shortest path lengths from `sources`; unreachable
    /// pixels (or no sources) stay at infinity.
    pub fn distances(&self, sources: &BinaryMask) -> Vec<f64> {
        let (w, h) = (self.scaled.width, self.scaled.height);
        let mut dist = vec![f64::INFINITY; w * h];
        let mut heap = BinaryHeap::new();
        for (p, &s) in sources.data().iter().enumerate() {
            if s {
                dist[p] = 0.0;
                heap.push(Entry { dist: 0.0, node: p });
            }
        }
        while let Some(Entry { dist: d, node: p }) = heap.pop() {
            if d > dist[p] {
                continue;
            }
            let (x, y) = ((p % w) as i64, (p / w) as i64);
            for &(dx, dy) in &NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let q = ny as usize * w + nx as usize;
                let nd = d + self.edge_cost(p, q, dx != 0 && dy != 0);
                if nd < dist[q] {
                    dist[q] = nd;
                    heap.push(Entry { dist: nd, node: q });
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then on node index for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::{ClickSet, Polarity};
    use crate::engines::{rasterize_clicks, EngineKind};

    #[test]
    fn uniform_image_splits_down_the_middle() {
        let img = RasterImage::from_fn_u8(8, 5, 1, |_, _| vec![90]).unwrap();
        let clicks: ClickSet = [(0, 2, Polarity::Positive), (7, 2, Polarity::Negative)]
            .into_iter()
            .collect();
        let seeds = rasterize_clicks(&clicks, 8, 5, 0);
        let params = EngineParams::new(EngineKind::Geodesic);
        let out = segment_with_seeds(&params, &img, &seeds, &EdgeMap::zeros(8, 5));
        assert_eq!(out.mask, BinaryMask::from_fn(8, 5, |x, _| x < 4));
    }

    #[test]
    fn odd_width_tie_goes_to_foreground() {
        let img = RasterImage::from_fn_u8(5, 1, 1, |_, _| vec![0]).unwrap();
        let clicks: ClickSet = [(0, 0, Polarity::Positive), (4, 0, Polarity::Negative)]
            .into_iter()
            .collect();
        let seeds = rasterize_clicks(&clicks, 5, 1, 0);
        let out = segment_with_seeds(&EngineParams::new(EngineKind::Geodesic), &img, &seeds, &EdgeMap::zeros(5, 1));
        assert_eq!(out.confidence[2], 0.5);
        assert!(out.mask.get(2, 0));
    }

    #[test]
    fn no_negative_seeds_is_all_foreground() {
        let img = RasterImage::from_fn_u8(6, 6, 1, |_, _| vec![40]).unwrap();
        let clicks: ClickSet = [(3, 3, Polarity::Positive)].into_iter().collect();
        let seeds = rasterize_clicks(&clicks, 6, 6, 1);
        let out = segment_with_seeds(&EngineParams::new(EngineKind::Geodesic), &img, &seeds, &EdgeMap::zeros(6, 6));
        assert_eq!(out.mask, BinaryMask::full(6, 6));
    }
}
