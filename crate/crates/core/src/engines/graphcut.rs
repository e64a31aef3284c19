//! Seeded graph cut: colour-histogram unaries plus contrast-sensitive
//! 8-neighbour smoothness, minimised exactly by max-flow.

use std::collections::HashMap;

use super::maxflow::{Capacity, MaxFlow, Segment};
use super::seeds::Seeds;
use super::{pair_prior, EngineOutput, EngineParams, ScaledImage};
use crate::error::Result;
use crate::raster::{BinaryMask, EdgeMap, RasterImage};

const BINS_PER_CHANNEL: usize = 16;
/// Above this many channels a joint histogram gets too sparse; the model
/// falls back to independent per-channel histograms.
const MAX_JOINT_CHANNELS: usize = 4;
const HISTOGRAM_PSEUDOCOUNT: f64 = 1.0;
const SIGMA2_FLOOR: f64 = 1e-6;
/// Width of the image-border band used as the background sample when no
/// negative seed survives.
const BORDER_RING: usize = 2;

const NEIGHBOURS: [(i64, i64); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

/// The s-t graph for one segmentation call, kept explicit so the same
/// network can be handed to an independent solver.
#[derive(Debug, Clone)]
pub struct CutProblem {
    pub width: usize,
    pub height: usize,
    /// Capacity of `source -> p`; paid when `p` ends up background.
    pub source_caps: Vec<f64>,
    /// Capacity of `p -> sink`; paid when `p` ends up foreground.
    pub sink_caps: Vec<f64>,
    /// Undirected n-links `(p, q, w)`.
    pub edges: Vec<(u32, u32, f64)>,
}

impl CutProblem {
    /// Value of the cut that puts `foreground` on the source side.
    pub fn cut_value(&self, foreground: &BinaryMask) -> f64 {
        let fg = foreground.data();
        let mut total = 0.0;
        for (p, &is_fg) in fg.iter().enumerate() {
            total += if is_fg { self.sink_caps[p] } else { self.source_caps[p] };
        }
        for &(p, q, w) in &self.edges {
            if fg[p as usize] != fg[q as usize] {
                total += w;
            }
        }
        total
    }

    pub fn solve(&self) -> (BinaryMask, f64) {
        let n = self.width * self.height;
        let mut graph = MaxFlow::<f64>::with_capacity(n, self.edges.len());
        for p in 0..n {
            graph.add_terminal_weights(p, self.source_caps[p], self.sink_caps[p]);
        }
        for &(p, q, w) in &self.edges {
            graph.add_edge(p as usize, q as usize, w, w);
        }
        let flow = graph.solve();
        let mask = BinaryMask::new(
            self.width,
            self.height,
            (0..n).map(|p| graph.segment(p) == Segment::Source).collect(),
        )
        .expect("one label per node");
        (mask, flow)
    }
}

#[derive(Debug, Clone)]
pub struct GraphCutResult {
    pub output: EngineOutput,
    pub flow: f64,
}

pub fn segment_with_seeds(
    params: &EngineParams,
    image: &RasterImage,
    seeds: &Seeds,
    prior: &EdgeMap,
) -> Result<GraphCutResult> {
    let problem = build_problem(params, image, seeds, prior);
    let (mask, flow) = problem.solve();
    let (w, h) = image.dims();
    let confidence = mask.data().iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
    Ok(GraphCutResult {
        output: EngineOutput::from_confidence(w, h, confidence),
        flow,
    })
}

pub fn build_problem(params: &EngineParams, image: &RasterImage, seeds: &Seeds, prior: &EdgeMap) -> CutProblem {
    let scaled = ScaledImage::new(image);
    let (w, h) = image.dims();
    let n = w * h;

    let model = ColourModel::new(image);
    let fg_hist = model.histogram(image, seeds.positive.data().iter().copied());
    let background_sample: Vec<bool> = if seeds.negative.is_empty() {
        (0..n)
            .map(|p| {
                let (x, y) = (p % w, p / w);
                let in_ring = x < BORDER_RING || y < BORDER_RING || x + BORDER_RING >= w || y + BORDER_RING >= h;
                in_ring && !seeds.positive.data()[p]
            })
            .collect()
    } else {
        seeds.negative.data().to_vec()
    };
    let bg_hist = model.histogram(image, background_sample.into_iter());

    let hard = f64::unbounded();
    let mut source_caps = Vec::with_capacity(n);
    let mut sink_caps = Vec::with_capacity(n);
    for p in 0..n {
        if seeds.positive.data()[p] {
            source_caps.push(hard);
            sink_caps.push(0.0);
        } else if seeds.negative.data()[p] {
            source_caps.push(0.0);
            sink_caps.push(hard);
        } else {
            let (x, y) = (p % w, p / w);
            let cost_fg = fg_hist.cost(&model, image.pixel(x, y));
            let cost_bg = bg_hist.cost(&model, image.pixel(x, y));
            let floor = cost_fg.min(cost_bg);
            source_caps.push(cost_bg - floor);
            sink_caps.push(cost_fg - floor);
        }
    }

    let mut pairs = Vec::with_capacity(4 * n);
    let mut sum_d2 = 0.0;
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            for &(dx, dy) in &NEIGHBOURS {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let p = y as usize * w + x as usize;
                let q = ny as usize * w + nx as usize;
                let d2 = scaled.dist2(p, q);
                sum_d2 += d2;
                pairs.push((p as u32, q as u32, d2, dx != 0 && dy != 0));
            }
        }
    }
    let sigma2 = if pairs.is_empty() {
        SIGMA2_FLOOR
    } else {
        (sum_d2 / pairs.len() as f64).max(SIGMA2_FLOOR)
    };

    let edges = pairs
        .into_iter()
        .map(|(p, q, d2, diagonal)| {
            let spatial = if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
            let attenuation = 1.0 - params.edge_prior_weight * pair_prior(prior, p as usize, q as usize);
            let weight = params.lambda * (-d2 / (2.0 * sigma2)).exp() / spatial * attenuation;
            (p, q, weight)
        })
        .collect();

    CutProblem {
        width: w,
        height: h,
        source_caps,
        sink_caps,
        edges,
    }
}

/// Maps pixels to histogram bins.
struct ColourModel {
    channels: usize,
    joint: bool,
    shift: u32,
}

impl ColourModel {
    fn new(image: &RasterImage) -> Self {
        ColourModel {
            channels: image.channels(),
            joint: image.channels() <= MAX_JOINT_CHANNELS,
            // 16 bins: keep the top four bits of each sample.
            shift: image.depth().bits() - 4,
        }
    }

    fn bin(&self, sample: u16) -> usize {
        usize::from(sample >> self.shift).min(BINS_PER_CHANNEL - 1)
    }

    fn joint_bin(&self, pixel: &[u16]) -> usize {
        pixel.iter().fold(0, |acc, &v| acc * BINS_PER_CHANNEL + self.bin(v))
    }

    fn histogram(&self, image: &RasterImage, include: impl Iterator<Item = bool>) -> Histogram {
        let mut hist = Histogram::default();
        let w = image.width();
        for (p, keep) in include.enumerate() {
            if !keep {
                continue;
            }
            let px = image.pixel(p % w, p / w);
            hist.total += 1;
            if self.joint {
                *hist.joint.entry(self.joint_bin(px)).or_default() += 1;
            } else {
                if hist.marginals.is_empty() {
                    hist.marginals = vec![[0; BINS_PER_CHANNEL]; self.channels];
                }
                for (c, &v) in px.iter().enumerate() {
                    hist.marginals[c][self.bin(v)] += 1;
                }
            }
        }
        hist
    }
}

#[derive(Default)]
struct Histogram {
    total: u64,
    joint: HashMap<usize, u64>,
    marginals: Vec<[u64; BINS_PER_CHANNEL]>,
}

impl Histogram {
    /// Negative log-likelihood of `pixel` under this histogram with
    /// add-one smoothing.
    fn cost(&self, model: &ColourModel, pixel: &[u16]) -> f64 {
        let total = self.total as f64;
        if model.joint {
            let bins = (BINS_PER_CHANNEL as f64).powi(model.channels as i32);
            let count = self.joint.get(&model.joint_bin(pixel)).copied().unwrap_or(0) as f64;
            -((count + HISTOGRAM_PSEUDOCOUNT) / (total + HISTOGRAM_PSEUDOCOUNT * bins)).ln()
        } else {
            let bins = BINS_PER_CHANNEL as f64;
            pixel
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let count = self.marginals.get(c).map_or(0, |m| m[model.bin(v)]) as f64;
                    -((count + HISTOGRAM_PSEUDOCOUNT) / (total + HISTOGRAM_PSEUDOCOUNT * bins)).ln()
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::{ClickSet, Polarity};
    use crate::engines::{rasterize_clicks, EngineKind};

    fn two_tone(w: usize, h: usize) -> RasterImage {
        RasterImage::from_fn_u8(w, h, 1, |x, _| vec![if x < w / 2 { 0 } else { 255 }]).unwrap()
    }

    #[test]
    fn cut_value_of_solution_equals_flow() {
        let img = two_tone(8, 8);
        let clicks: ClickSet = [(1, 4, Polarity::Positive), (6, 4, Polarity::Negative)]
            .into_iter()
            .collect();
        let params = EngineParams::new(EngineKind::GraphCut).with_seed_radius(1);
        let seeds = rasterize_clicks(&clicks, 8, 8, 1);
        let problem = build_problem(&params, &img, &seeds, &EdgeMap::zeros(8, 8));
        let (mask, flow) = problem.solve();
        assert!((problem.cut_value(&mask) - flow).abs() <= 1e-9 * flow.max(1.0));
        assert_eq!(mask, BinaryMask::from_fn(8, 8, |x, _| x < 4));
    }

    #[test]
    fn joint_bins_are_distinct_per_channel_order() {
        let img = RasterImage::from_fn_u8(1, 1, 3, |_, _| vec![255, 0, 16]).unwrap();
        let model = ColourModel::new(&img);
        assert_eq!(model.joint_bin(img.pixel(0, 0)), 15 * 256 + 1);
    }

    #[test]
    fn wide_images_use_marginal_histograms() {
        let img = RasterImage::new(2, 1, 6, crate::raster::BitDepth::Eight, vec![0; 12]).unwrap();
        let model = ColourModel::new(&img);
        assert!(!model.joint);
        let hist = model.histogram(&img, [true, false].into_iter());
        assert!(hist.cost(&model, img.pixel(0, 0)) < hist.cost(&model, &[255; 6]));
    }

    #[test]
    fn prior_attenuates_pairwise_weights() {
        let img = two_tone(4, 4);
        let clicks: ClickSet = [(0, 0, Polarity::Positive)].into_iter().collect();
        let seeds = rasterize_clicks(&clicks, 4, 4, 0);
        let params = EngineParams::default();
        let plain = build_problem(&params, &img, &seeds, &EdgeMap::zeros(4, 4));
        let prior = EdgeMap::new(4, 4, vec![1.0; 16]).unwrap();
        let damped = build_problem(&params, &img, &seeds, &prior);
        for (a, b) in plain.edges.iter().zip(&damped.edges) {
            assert!((b.2 - a.2 * (1.0 - params.edge_prior_weight)).abs() < 1e-12);
        }
    }
}
