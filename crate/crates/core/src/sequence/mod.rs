//! Mask propagation through videos and volumes.
//!
//! Each annotated reference frame seeds a memory of patch descriptors
//! paired with its mask. Neighbouring frames are labelled by matching their
//! descriptors against the memory and copying the matched mask pixels;
//! each newly labelled frame joins the memory before the next step.
//! Candidates from several references are fused by a confidence-weighted
//! vote. Volumes become frame sequences by slicing along one axis.

mod descriptors;
mod propagate;
mod transfer;
mod volume;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{is_supported_image, load_image, write_mask, MaskMode};
use crate::raster::{LabelMask, RasterImage};

pub use descriptors::{extract_descriptors, grid_descriptors, grid_points, DescriptorSet, PatchFeatures, GRADIENT_BINS};
pub use propagate::{fuse, propagate, Candidate, FrameResult};
pub use transfer::{transfer_labels, MemoryBank, MemoryFrame, Transfer};
pub use volume::{
    frames_to_volume, read_volume, read_volume_header, volume_to_frames, write_slice_dir, write_volume, Volume,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub grid_stride: usize,
    /// Odd side length of the descriptor window.
    pub patch_size: usize,
    /// Largest grid displacement (pixels, per axis) a match may have.
    pub search_window: usize,
    pub knn: usize,
    /// Temporal decay constant in frames.
    pub tau: f64,
    pub refine_with_graphcut: bool,
    /// Added to a match's squared descriptor distance per squared pixel
    /// of displacement; breaks ties between identical descriptors in
    /// favour of the nearest one.
    pub spatial_weight: f64,
    /// Propagated frames kept in memory besides the reference.
    pub memory_frames: usize,
    /// Pairwise weight for the optional graph-cut refinement.
    pub refine_lambda: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            grid_stride: 4,
            patch_size: 7,
            search_window: 48,
            knn: 5,
            tau: 10.0,
            refine_with_graphcut: false,
            spatial_weight: 1e-5,
            memory_frames: 8,
            refine_lambda: 1.0,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("propagation params", reason.to_string()));
        if self.grid_stride == 0 || self.patch_size == 0 || self.search_window == 0 || self.knn == 0 {
            return bad("grid_stride, patch_size, search_window and knn must be positive");
        }
        if self.patch_size % 2 == 0 {
            return bad("patch_size must be odd");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.spatial_weight >= 0.0 && self.spatial_weight.is_finite()) {
            return bad("spatial_weight must be non-negative");
        }
        if !(self.refine_lambda >= 0.0 && self.refine_lambda.is_finite()) {
            return bad("refine_lambda must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<RasterImage>,
    /// Frame interval or slice spacing; metadata only.
    pub spacing: f64,
}

impl FrameSequence {
    pub fn new(frames: Vec<RasterImage>, spacing: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::invalid("frame sequence", "needs at least one frame"))?;
        let shape = |f: &RasterImage| (f.dims(), f.channels(), f.depth());
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| shape(f) != shape(first)) {
            return Err(Error::invalid(
                "frame sequence",
                format!("frame {i} is {:?}, frame 0 is {:?}", shape(f), shape(first)),
            ));
        }
        Ok(FrameSequence { frames, spacing })
    }

    /// Loads every supported image in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_supported_image(p))
            .collect();
        paths.sort();
        let frames = paths.iter().map(|p| load_image(p)).collect::<Result<_>>()?;
        FrameSequence::new(frames, 1.0)
    }

    pub fn frames(&self) -> &[RasterImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Annotated frames keyed by index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceSet {
    entries: BTreeMap<usize, LabelMask>,
}

impl ReferenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame: usize, mask: LabelMask) -> Option<LabelMask> {
        self.entries.insert(frame, mask)
    }

    pub fn remove(&mut self, frame: usize) -> Option<LabelMask> {
        self.entries.remove(&frame)
    }

    pub fn get(&self, frame: usize) -> Option<&LabelMask> {
        self.entries.get(&frame)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &LabelMask)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    pub fn validate(&self, sequence: &FrameSequence) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid("references", "at least one reference frame is required"));
        }
        for (&i, mask) in &self.entries {
            if i >= sequence.len() {
                return Err(Error::invalid(
                    "references",
                    format!("frame {i} outside a {}-frame sequence", sequence.len()),
                ));
            }
            if mask.dims() != sequence.dims() {
                return Err(Error::DimensionMismatch {
                    expected: sequence.dims(),
                    actual: mask.dims(),
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<(usize, LabelMask)> for ReferenceSet {
    fn from_iter<I: IntoIterator<Item = (usize, LabelMask)>>(iter: I) -> Self {
        ReferenceSet {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Writes `frame_0000.png`, `frame_0001.png`, ... as greyscale label PNGs.
pub fn write_frame_masks(masks: &[LabelMask], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    masks
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let path = dir.join(format!("frame_{i:04}.png"));
            write_mask(m, MaskMode::Grayscale, &path)?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(PropagationParams::default().validate().is_ok());
        let even = PropagationParams {
            patch_size: 6,
            ..Default::default()
        };
        assert!(even.validate().is_err());
    }

    #[test]
    fn sequence_rejects_mixed_shapes() {
        let a = RasterImage::from_fn_u8(4, 4, 1, |_, _| vec![0]).unwrap();
        let b = RasterImage::from_fn_u8(4, 5, 1, |_, _| vec![0]).unwrap();
        assert!(FrameSequence::new(vec![a.clone(), b], 1.0).is_err());
        assert!(FrameSequence::new(vec![], 1.0).is_err());
        assert_eq!(FrameSequence::new(vec![a.clone(), a], 1.0).unwrap().len(), 2);
    }
}
