//! Click-driven segmentation backends.
//!
//! Every backend takes an image, the ordered clicks and the edge prior from
//! the previous round, and returns a binary mask, a per-pixel foreground
//! confidence and the edge map to feed back on the next call.

pub mod edge;
pub mod geodesic;
pub mod graphcut;
pub mod maxflow;
pub mod random_walker;
pub mod seeds;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::click::ClickSet;
use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, BinaryMask, EdgeMap, RasterImage};

pub use edge::edge_from_mask;
pub use seeds::{rasterize_clicks, Seeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    GraphCut,
    RandomWalker,
    Geodesic,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [
        EngineKind::GraphCut,
        EngineKind::RandomWalker,
        EngineKind::Geodesic,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EngineKind::GraphCut => "graphcut",
            EngineKind::RandomWalker => "randomwalker",
            EngineKind::Geodesic => "geodesic",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let ids: Vec<_> = EngineKind::ALL.iter().map(|k| k.id()).collect();
                Error::invalid("engine id", format!("{s:?} (valid: {})", ids.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    pub engine: EngineKind,
    /// Radius of the hard-constrained disk painted around each click.
    pub seed_radius: u32,
    /// Graph-cut pairwise weight.
    pub lambda: f64,
    /// Random-walker contrast sensitivity, on intensities scaled to [0, 1].
    pub beta: f64,
    /// Random-walker stopping bound on the largest residual entry, measured
    /// in units of the weakest edge weight.
    pub solver_tolerance: f64,
    pub solver_max_iterations: usize,
    /// How strongly last round's boundary attenuates pairwise terms.
    pub edge_prior_weight: f64,
    /// Geodesic contrast factor on intensities scaled to [0, 1]; 1.0 is the
    /// same as 1/255 per 8-bit grey level.
    pub geodesic_contrast: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            engine: EngineKind::GraphCut,
            seed_radius: 5,
            lambda: 50.0,
            beta: 90.0,
            solver_tolerance: 1e-6,
            solver_max_iterations: 20_000,
            edge_prior_weight: 0.5,
            geodesic_contrast: 1.0,
        }
    }
}

impl EngineParams {
    pub fn new(engine: EngineKind) -> Self {
        EngineParams {
            engine,
            ..EngineParams::default()
        }
    }

    pub fn with_seed_radius(mut self, radius: u32) -> Self {
        self.seed_radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("solver_tolerance", self.solver_tolerance),
            ("geodesic_contrast", self.geodesic_contrast),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("engine params", format!("{name} must be positive, got {v}")));
            }
        }
        if self.solver_max_iterations == 0 {
            return Err(Error::invalid("engine params", "solver_max_iterations must be positive"));
        }
        if !(0.0..=1.0).contains(&self.edge_prior_weight) {
            return Err(Error::invalid(
                "engine params",
                format!("edge_prior_weight {} outside [0, 1]", self.edge_prior_weight),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutput {
    pub mask: BinaryMask,
    /// Foreground probability per pixel; `mask` is `confidence >= 0.5`.
    pub confidence: Vec<f64>,
    pub edge: EdgeMap,
}

impl EngineOutput {
    pub(crate) fn from_confidence(width: usize, height: usize, confidence: Vec<f64>) -> Self {
        let mask = BinaryMask::new(width, height, confidence.iter().map(|&c| c >= 0.5).collect())
            .expect("confidence has one entry per pixel");
        let edge = edge_from_mask(&mask);
        EngineOutput {
            mask,
            confidence,
            edge,
        }
    }
}

/// Anything that turns (image, clicks, prior) into a mask.
pub trait Segmenter: Sync {
    fn id(&self) -> &str;

    fn segment(&self, image: &RasterImage, clicks: &ClickSet, prior: &EdgeMap) -> Result<EngineOutput>;
}

impl Segmenter for EngineParams {
    fn id(&self) -> &str {
        self.engine.id()
    }

    fn segment(&self, image: &RasterImage, clicks: &ClickSet, prior: &EdgeMap) -> Result<EngineOutput> {
        segment(self, image, clicks, prior)
    }
}

/// Runs the backend selected by `params.engine`.
pub fn segment(
    params: &EngineParams,
    image: &RasterImage,
    clicks: &ClickSet,
    prior: &EdgeMap,
) -> Result<EngineOutput> {
    params.validate()?;
    ensure_same_dims(image.dims(), prior.dims())?;
    clicks.check_bounds(image.width(), image.height())?;
    if !clicks.has_positive() {
        return Err(Error::NoPositiveClick);
    }
    let seeds = rasterize_clicks(clicks, image.width(), image.height(), params.seed_radius);
    match params.engine {
        EngineKind::GraphCut => graphcut::segment_with_seeds(params, image, &seeds, prior).map(|r| r.output),
        EngineKind::RandomWalker => random_walker::segment_with_seeds(params, image, &seeds, prior),
        EngineKind::Geodesic => Ok(geodesic::segment_with_seeds(params, image, &seeds, prior)),
    }
}

/// Image samples scaled to [0, 1], laid out for fast neighbour distances.
pub(crate) struct ScaledImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl ScaledImage {
    pub fn new(image: &RasterImage) -> Self {
        ScaledImage {
            width: image.width(),
            height: image.height(),
            channels: image.channels(),
            values: image.normalized(),
        }
    }

    /// Squared Euclidean colour distance between pixels `p` and `q`.
    #[inline]
    pub fn dist2(&self, p: usize, q: usize) -> f64 {
        let c = self.channels;
        let (a, b) = (&self.values[p * c..p * c + c], &self.values[q * c..q * c + c]);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// Prior value on the pair `(p, q)`: the larger of the two endpoints.
#[inline]
pub(crate) fn pair_prior(prior: &EdgeMap, p: usize, q: usize) -> f64 {
    let v = prior.values();
    v[p].max(v[q])
}
