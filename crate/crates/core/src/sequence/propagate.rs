use rayon::prelude::*;

use super::transfer::{transfer_labels, MemoryBank, MemoryFrame};
use super::{FrameSequence, PropagationParams, ReferenceSet};
use crate::error::{Error, Result};
use crate::raster::LabelMask;

/// One reference's proposal for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub mask: LabelMask,
    pub confidence: Vec<f64>,
    /// Distance in frames to the reference.
    pub dt: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub mask: LabelMask,
    /// Winning vote weight per pixel, including the temporal decay.
    pub confidence: Vec<f64>,
    /// Nearest contributing reference (lower index on ties).
    pub source_reference: usize,
}

/// Propagates every reference to every other frame and fuses the
/// candidates. Reference frames keep their own masks with confidence 1.
pub fn propagate(sequence: &FrameSequence, references: &ReferenceSet, params: &PropagationParams) -> Result<Vec<FrameResult>> {
    params.validate()?;
    references.validate(sequence)?;
    let refs: Vec<(usize, &LabelMask)> = references.iter().collect();

    let per_reference: Vec<Vec<(usize, Candidate)>> = refs
        .par_iter()
        .map(|&(r, mask)| propagate_from(sequence, r, mask, params))
        .collect::<Result<_>>()?;

    let n = sequence.len();
    let mut by_frame: Vec<Vec<Candidate>> = vec![Vec::new(); n];
    for list in per_reference {
        for (t, c) in list {
            by_frame[t].push(c);
        }
    }

    (0..n)
        .map(|t| {
            if let Some(mask) = references.get(t) {
                return Ok(FrameResult {
                    mask: mask.clone(),
                    confidence: vec![1.0; mask.labels().len()],
                    source_reference: t,
                });
            }
            fuse_detailed(&by_frame[t], params.tau).map_err(|e| Error::Propagation {
                frame: t,
                source: Box::new(e),
            })
        })
        .collect()
}

fn propagate_from(
    sequence: &FrameSequence,
    r: usize,
    mask: &LabelMask,
    params: &PropagationParams,
) -> Result<Vec<(usize, Candidate)>> {
    let frames = sequence.frames();
    let wrap = |frame: usize| move |e: Error| Error::Propagation { frame, source: Box::new(e) };
    let reference = MemoryFrame::new(r, &frames[r], mask.clone(), params).map_err(wrap(r))?;
    let mut out = Vec::new();
    let forward: Vec<usize> = (r + 1..frames.len()).collect();
    let backward: Vec<usize> = (0..r).rev().collect();
    for order in [forward, backward] {
        let mut memory = MemoryBank::new(reference.clone(), params.memory_frames);
        for t in order {
            let transfer = transfer_labels(&frames[t], &memory, params).map_err(wrap(t))?;
            let mut descriptors = transfer.descriptors;
            let labels = descriptors
                .ys
                .iter()
                .flat_map(|&y| descriptors.xs.iter().map(move |&x| (x, y)))
                .map(|(x, y)| transfer.mask.get(x, y))
                .collect();
            descriptors.labels = Some(labels);
            memory.push(MemoryFrame {
                frame_index: t,
                descriptors,
                mask: transfer.mask.clone(),
                features: transfer.features,
            });
            out.push((
                t,
                Candidate {
                    mask: transfer.mask,
                    confidence: transfer.confidence,
                    dt: t.abs_diff(r),
                    reference: r,
                },
            ));
        }
    }
    Ok(out)
}

/// Per-pixel weighted vote, weight = confidence × exp(−Δt/τ). Label 0
/// votes like any other. Equal totals go to the label backed by the
/// temporally nearest candidate, then the lowest reference index.
pub fn fuse(candidates: &[Candidate], tau: f64) -> Result<LabelMask> {
    Ok(fuse_detailed(candidates, tau)?.mask)
}

fn fuse_detailed(candidates: &[Candidate], tau: f64) -> Result<FrameResult> {
    let first = candidates
        .first()
        .ok_or_else(|| Error::invalid("fusion", "needs at least one candidate"))?;
    let dims = first.mask.dims();
    for c in candidates {
        if c.mask.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: c.mask.dims(),
            });
        }
        if c.confidence.len() != c.mask.labels().len() {
            return Err(Error::invalid("fusion", "confidence map does not match mask size"));
        }
    }
    // Candidate order for tie breaks: nearer first, then lower reference.
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by_key(|&i| (candidates[i].dt, candidates[i].reference));
    let decay: Vec<f64> = candidates.iter().map(|c| (-(c.dt as f64) / tau).exp()).collect();

    let n = dims.0 * dims.1;
    let mut labels = Vec::with_capacity(n);
    let mut confidence = Vec::with_capacity(n);
    let mut totals: Vec<(u16, f64, usize, f64)> = Vec::new();
    for p in 0..n {
        // (label, total weight, rank of best backing candidate, best weight)
        totals.clear();
        for (rank, &i) in order.iter().enumerate() {
            let c = &candidates[i];
            let label = c.mask.labels()[p];
            let weight = c.confidence[p] * decay[i];
            match totals.iter_mut().find(|t| t.0 == label) {
                Some(t) => {
                    t.1 += weight;
                    t.3 = t.3.max(weight);
                }
                None => totals.push((label, weight, rank, weight)),
            }
        }
        let win = totals
            .iter()
            .copied()
            .reduce(|a, b| if b.1 > a.1 || (b.1 == a.1 && b.2 < a.2) { b } else { a })
            .expect("one candidate at least");
        labels.push(win.0);
        confidence.push(win.3);
    }
    Ok(FrameResult {
        mask: LabelMask::new(dims.0, dims.1, labels)?,
        confidence,
        source_reference: candidates[order[0]].reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::iou;
    use crate::raster::RasterImage;
    use crate::synth::translating_square;

    fn cand(labels: Vec<u16>, conf: f64, dt: usize, reference: usize) -> Candidate {
        let n = labels.len();
        Candidate {
            mask: LabelMask::new(n, 1, labels).unwrap(),
            confidence: vec![conf; n],
            dt,
            reference,
        }
    }

    #[test]
    fn fuse_single_and_copies() {
        let c = cand(vec![0, 1, 2, 1], 0.7, 3, 0);
        assert_eq!(fuse(&[c.clone()], 10.0).unwrap(), c.mask);
        assert_eq!(fuse(&[c.clone(), c.clone(), c.clone()], 10.0).unwrap(), c.mask);
    }

    #[test]
    fn fuse_prefers_nearer_weight() {
        // e^-0.2 beats e^-0.6.
        let out = fuse(&[cand(vec![1], 1.0, 2, 0), cand(vec![0], 1.0, 6, 8)], 10.0).unwrap();
        assert_eq!(out.labels(), &[1]);
    }

    #[test]
    fn fuse_tie_goes_to_nearer_then_lower_reference() {
        let out = fuse(&[cand(vec![0], 1.0, 3, 0), cand(vec![1], 1.0, 3, 6)], 10.0).unwrap();
        assert_eq!(out.labels(), &[0]);
        let out = fuse(&[cand(vec![2], 1.0, 3, 6), cand(vec![1], 1.0, 3, 0)], 10.0).unwrap();
        assert_eq!(out.labels(), &[1]);
        assert!(fuse(&[], 10.0).is_err());
        let bad = [cand(vec![0], 1.0, 1, 0), cand(vec![0, 0], 1.0, 1, 0)];
        assert!(matches!(fuse(&bad, 10.0), Err(Error::DimensionMismatch { .. })));
    }

    fn identical(n: usize) -> (FrameSequence, LabelMask) {
        let (frames, masks) = translating_square(1, 40, 10, 4, 2);
        let seq = FrameSequence::new(vec![frames[0].clone(); n], 1.0).unwrap();
        (seq, masks[0].to_label_mask(1))
    }

    #[test]
    fn identical_frames_fixpoint_and_monotone_confidence() {
        let (seq, mask) = identical(5);
        let refs: ReferenceSet = [(0, mask.clone())].into_iter().collect();
        let out = propagate(&seq, &refs, &PropagationParams::default()).unwrap();
        let mut last = f64::INFINITY;
        for r in &out {
            assert_eq!(r.mask, mask);
            let c = r.confidence.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn two_references_fuse_middle() {
        let (seq, mask) = identical(3);
        let refs: ReferenceSet = [(0, mask.clone()), (2, mask.clone())].into_iter().collect();
        let out = propagate(&seq, &refs, &PropagationParams::default()).unwrap();
        assert_eq!(out[1].mask, mask);
        assert_eq!(out[1].source_reference, 0);
    }

    #[test]
    fn translating_square_tracks() {
        let (frames, masks) = translating_square(5, 64, 16, 4, 11);
        let seq = FrameSequence::new(frames, 1.0).unwrap();
        let refs: ReferenceSet = [(0, masks[0].to_label_mask(1))].into_iter().collect();
        let out = propagate(&seq, &refs, &PropagationParams::default()).unwrap();
        for (r, gt) in out.iter().zip(&masks) {
            assert!(iou(&r.mask.foreground(), gt).unwrap() >= 0.9);
        }
    }

    #[test]
    fn references_are_validated() {
        let img = RasterImage::from_fn_u8(8, 8, 1, |_, _| vec![0]).unwrap();
        let seq = FrameSequence::new(vec![img; 2], 1.0).unwrap();
        assert!(propagate(&seq, &ReferenceSet::new(), &PropagationParams::default()).is_err());
        let refs: ReferenceSet = [(5, LabelMask::zeros(8, 8))].into_iter().collect();
        assert!(propagate(&seq, &refs, &PropagationParams::default()).is_err());
    }
}
