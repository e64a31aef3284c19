//! Simulated-click evaluation: a deterministic clicker that always targets
//! the interior of the largest error region, per-instance sessions, and
//! NoC / mIoU aggregation over datasets.

pub mod dataset;

use serde::{Deserialize, Serialize};

use crate::click::{ClickSet, Polarity};
use crate::components::{connected_components, Connectivity};
use crate::distance::{argmax_where, distance_transform};
use crate::engines::{EngineOutput, Segmenter};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::raster::{ensure_same_dims, BinaryMask, EdgeMap, RasterImage};

pub use dataset::{evaluate_dataset, BenchmarkReport, EvalEngine, SkippedInstance};

/// Where the simulator wants the next click.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub x: u32,
    pub y: u32,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub max_clicks: usize,
    pub thresholds: Vec<f64>,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            max_clicks: 20,
            thresholds: vec![0.85, 0.90],
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.max_clicks == 0 {
            return Err(Error::invalid("protocol", "max_clicks must be at least 1"));
        }
        if self.thresholds.is_empty() {
            return Err(Error::invalid("protocol", "at least one IoU threshold is required"));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::invalid("protocol", format!("threshold {t} outside (0, 1]")));
        }
        Ok(())
    }
}

/// Positive click at the interior-most ground-truth pixel.
pub fn first_click(gt: &BinaryMask) -> Result<Placement> {
    interior_point(gt, Polarity::Positive).ok_or(Error::EmptyGroundTruth)
}

/// Click at the interior of the largest false-negative or false-positive
/// region (8-connected). Ties prefer false negatives, then the component
/// found first in raster order.
pub fn next_click(pred: &BinaryMask, gt: &BinaryMask) -> Result<Placement> {
    ensure_same_dims(gt.dims(), pred.dims())?;
    let false_neg = gt.and_not(pred)?;
    let false_pos = pred.and_not(gt)?;
    let fn_cc = connected_components(&false_neg, Connectivity::Eight);
    let fp_cc = connected_components(&false_pos, Connectivity::Eight);

    // (area, polarity rank, id): the max wins; FN ranks above FP and lower
    // ids rank above higher ones.
    let mut best: Option<(usize, Polarity, u32)> = None;
    let candidates = fn_cc
        .areas
        .iter()
        .enumerate()
        .map(|(i, &a)| (a, Polarity::Positive, i as u32 + 1))
        .chain(
            fp_cc
                .areas
                .iter()
                .enumerate()
                .map(|(i, &a)| (a, Polarity::Negative, i as u32 + 1)),
        );
    for cand in candidates {
        if best.map_or(true, |b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    let (_, polarity, id) = best.ok_or(Error::NoErrorRegion)?;
    let region = match polarity {
        Polarity::Positive => fn_cc.mask_of(id),
        Polarity::Negative => fp_cc.mask_of(id),
    };
    Ok(interior_point(&region, polarity).expect("selected component is nonempty"))
}

fn interior_point(region: &BinaryMask, polarity: Polarity) -> Option<Placement> {
    let dt = distance_transform(region);
    let data = region.data();
    let best = argmax_where(&dt, |i| data[i])?;
    let w = region.width();
    Some(Placement {
        x: (best % w) as u32,
        y: (best / w) as u32,
        polarity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOutcome {
    pub threshold: f64,
    /// Clicks needed to reach the threshold; `max_clicks` when never reached.
    pub noc: usize,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub instance_id: String,
    /// Exactly `max_clicks` entries; padded with the last value when the
    /// session stops early.
    pub iou_after_click: Vec<f64>,
    pub outcomes: Vec<ThresholdOutcome>,
    pub clicks: Vec<Placement>,
}

impl SessionTrace {
    pub fn noc(&self, threshold: f64) -> Option<usize> {
        self.outcomes
            .iter()
            .find(|o| o.threshold == threshold)
            .map(|o| o.noc)
    }
}

/// Returns the ground truth on every call; the ideal engine.
#[derive(Debug, Clone)]
pub struct OracleEngine {
    pub gt: BinaryMask,
}

impl Segmenter for OracleEngine {
    fn id(&self) -> &str {
        "oracle"
    }

    fn segment(&self, image: &RasterImage, _clicks: &ClickSet, _prior: &EdgeMap) -> Result<EngineOutput> {
        ensure_same_dims(image.dims(), self.gt.dims())?;
        let (w, h) = self.gt.dims();
        Ok(EngineOutput::from_confidence(
            w,
            h,
            self.gt.data().iter().map(|&g| if g { 1.0 } else { 0.0 }).collect(),
        ))
    }
}

/// Simulated interaction on one instance: click, segment with the previous
/// round's edge map as prior, score, repeat until every threshold is met
/// or `max_clicks` is spent.
pub fn run_session<S: Segmenter + ?Sized>(
    engine: &S,
    instance_id: &str,
    image: &RasterImage,
    gt: &BinaryMask,
    protocol: &Protocol,
) -> Result<SessionTrace> {
    protocol.validate()?;
    ensure_same_dims(image.dims(), gt.dims())?;
    let (w, h) = gt.dims();

    let mut clicks = ClickSet::new();
    let mut placements = Vec::new();
    let mut prior = EdgeMap::zeros(w, h);
    let mut pred: Option<BinaryMask> = None;
    let mut ious = Vec::with_capacity(protocol.max_clicks);
    let mut outcomes: Vec<ThresholdOutcome> = protocol
        .thresholds
        .iter()
        .map(|&t| ThresholdOutcome {
            threshold: t,
            noc: protocol.max_clicks,
            reached: false,
        })
        .collect();

    for k in 1..=protocol.max_clicks {
        let placement = match &pred {
            None => first_click(gt)?,
            Some(p) => next_click(p, gt)?,
        };
        clicks.push(placement.x, placement.y, placement.polarity);
        placements.push(placement);
        let out = engine
            .segment(image, &clicks, &prior)
            .map_err(|e| Error::Session {
                instance: instance_id.to_string(),
                click: k,
                source: Box::new(e),
            })?;
        let score = iou(&out.mask, gt)?;
        ious.push(score);
        for o in outcomes.iter_mut().filter(|o| !o.reached) {
            if score >= o.threshold {
                o.noc = k;
                o.reached = true;
            }
        }
        prior = out.edge;
        pred = Some(out.mask);
        if outcomes.iter().all(|o| o.reached) {
            break;
        }
    }
    let last = *ious.last().expect("at least one click is always placed");
    ious.resize(protocol.max_clicks, last);

    Ok(SessionTrace {
        instance_id: instance_id.to_string(),
        iou_after_click: ious,
        outcomes,
        clicks: placements,
    })
}
