//! Frame sequences and asynchronous propagation jobs.
//!
//! Each sequence keeps its frames and references behind a per-sequence
//! mutex, and the latest job snapshot behind a separate lock that only
//! ever swaps an `Arc`, so status polls never wait on a running request.

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use serde::{Deserialize, Serialize};

use clickmask::io::read_mask;
use clickmask::sequence::{propagate as run_propagation, read_volume, volume_to_frames, FrameResult};
use clickmask::sequence::{FrameSequence, PropagationParams, ReferenceSet};
use clickmask::LabelMask;

use crate::error::{ApiError, ApiResult};
use crate::rle::RleMask;
use crate::{lookup, AppState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Idle,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameStatus {
    Pending,
    Reference,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    /// Incremented by every propagate request.
    epoch: u64,
    state: JobState,
    frames: Vec<FrameStatus>,
    error: Option<String>,
    #[serde(skip)]
    results: Option<Arc<Vec<FrameResult>>>,
}

pub struct SequenceEntry {
    inner: tokio::sync::Mutex<SequenceInner>,
    board: RwLock<Arc<Snapshot>>,
}

struct SequenceInner {
    frames: Arc<FrameSequence>,
    references: ReferenceSet,
}

impl SequenceEntry {
    fn snapshot(&self) -> Arc<Snapshot> {
        Arc::clone(&self.board.read().expect("status lock poisoned"))
    }

    fn publish(&self, snapshot: Snapshot) {
        *self.board.write().expect("status lock poisoned") = Arc::new(snapshot);
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    frames_dir: Option<PathBuf>,
    volume: Option<PathBuf>,
    #[serde(default = "default_axis")]
    axis: usize,
}

fn default_axis() -> usize {
    2
}

#[derive(Debug, Serialize)]
pub struct CreateResponse {
    sequence_id: u64,
    frames: usize,
    width: usize,
    height: usize,
}

pub async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> ApiResult<Json<CreateResponse>> {
    let load = move || match (req.frames_dir, req.volume) {
        (Some(dir), None) => FrameSequence::load_dir(&dir),
        (None, Some(path)) => volume_to_frames(&read_volume(&path)?, req.axis),
        _ => Err(clickmask::Error::Invalid {
            what: "sequence source".into(),
            reason: "give exactly one of frames_dir and volume".into(),
        }),
    };
    let frames = tokio::task::spawn_blocking(load)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let (width, height) = frames.dims();
    let n = frames.len();
    let entry = SequenceEntry {
        inner: tokio::sync::Mutex::new(SequenceInner {
            frames: Arc::new(frames),
            references: ReferenceSet::new(),
        }),
        board: RwLock::new(Arc::new(Snapshot {
            epoch: 0,
            state: JobState::Idle,
            frames: vec![FrameStatus::Pending; n],
            error: None,
            results: None,
        })),
    };
    let id = state.sequence_id();
    state
        .0
        .sequences
        .lock()
        .expect("registry lock poisoned")
        .insert(id, Arc::new(entry));
    Ok(Json(CreateResponse {
        sequence_id: id,
        frames: n,
        width,
        height,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ReferenceRequest {
    frame: usize,
    mask: Option<RleMask>,
    /// Label painted for the foreground of `mask`.
    label: Option<u16>,
    mask_path: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct ReferenceResponse {
    frame: usize,
    references: Vec<usize>,
}

pub async fn add_reference(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<ReferenceRequest>,
) -> ApiResult<Json<ReferenceResponse>> {
    let entry = lookup(&state.0.sequences, id, "sequence")?;
    let mut inner = entry.inner.lock().await;
    if req.frame >= inner.frames.len() {
        return Err(ApiError::not_found("frame", req.frame));
    }
    let mask: LabelMask = match (req.mask, req.mask_path) {
        (Some(rle), None) => {
            let label = req.label.unwrap_or(1);
            if label == 0 {
                return Err(ApiError::bad_request("reference label must be positive"));
            }
            rle.decode().map_err(ApiError::bad_request)?.to_label_mask(label)
        }
        (None, Some(path)) => read_mask(&path)?,
        _ => return Err(ApiError::bad_request("give exactly one of mask and mask_path")),
    };
    if mask.dims() != inner.frames.dims() {
        return Err(clickmask::Error::DimensionMismatch {
            expected: inner.frames.dims(),
            actual: mask.dims(),
        }
        .into());
    }
    inner.references.insert(req.frame, mask);
    Ok(Json(ReferenceResponse {
        frame: req.frame,
        references: inner.references.iter().map(|(k, _)| k).collect(),
    }))
}

#[derive(Debug, Default, Deserialize)]
pub struct PropagateRequest {
    #[serde(default)]
    params: PropagationParams,
}

pub async fn propagate(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    body: Option<Json<PropagateRequest>>,
) -> ApiResult<(StatusCode, Json<Snapshot>)> {
    let params = body.map(|Json(b)| b.params).unwrap_or_default();
    params.validate()?;
    let entry = lookup(&state.0.sequences, id, "sequence")?;
    let inner = entry.inner.lock().await;
    if inner.references.is_empty() {
        return Err(ApiError::conflict("add a reference mask before propagating"));
    }
    let frames = Arc::clone(&inner.frames);
    let references = inner.references.clone();
    let epoch = entry.snapshot().epoch + 1;
    let statuses: Vec<FrameStatus> = (0..frames.len())
        .map(|t| match references.get(t) {
            Some(_) => FrameStatus::Reference,
            None => FrameStatus::Pending,
        })
        .collect();
    let running = Snapshot {
        epoch,
        state: JobState::Running,
        frames: statuses.clone(),
        error: None,
        results: None,
    };
    entry.publish(running.clone());
    drop(inner);

    let slots = Arc::clone(&state.0.propagation_slots);
    let job_entry = Arc::clone(&entry);
    tokio::spawn(async move {
        let Ok(_permit) = slots.acquire_owned().await else {
            return;
        };
        let outcome =
            tokio::task::spawn_blocking(move || run_propagation(&frames, &references, &params)).await;
        let finished = match outcome {
            Ok(Ok(results)) => Snapshot {
                epoch,
                state: JobState::Done,
                frames: statuses
                    .iter()
                    .map(|s| match s {
                        FrameStatus::Reference => FrameStatus::Reference,
                        _ => FrameStatus::Done,
                    })
                    .collect(),
                error: None,
                results: Some(Arc::new(results)),
            },
            Ok(Err(e)) => failed(epoch, &statuses, e.to_string()),
            Err(e) => failed(epoch, &statuses, format!("worker failed: {e}")),
        };
        // A newer request supersedes this job; drop stale results.
        let mut board = job_entry.board.write().expect("status lock poisoned");
        if board.epoch == epoch {
            *board = Arc::new(finished);
        }
    });
    Ok((StatusCode::ACCEPTED, Json(running)))
}

fn failed(epoch: u64, statuses: &[FrameStatus], error: String) -> Snapshot {
    Snapshot {
        epoch,
        state: JobState::Failed,
        frames: statuses
            .iter()
            .map(|s| match s {
                FrameStatus::Reference => FrameStatus::Reference,
                _ => FrameStatus::Failed,
            })
            .collect(),
        error: Some(error),
        results: None,
    }
}

pub async fn status(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Snapshot>> {
    let entry = lookup(&state.0.sequences, id, "sequence")?;
    Ok(Json(entry.snapshot().as_ref().clone()))
}

#[derive(Debug, Serialize)]
pub struct LabelRegion {
    label: u16,
    mask: RleMask,
}

#[derive(Debug, Serialize)]
pub struct FrameMaskResponse {
    frame: usize,
    epoch: u64,
    /// `[height, width]`.
    size: [usize; 2],
    /// One binary mask per nonzero label, in increasing label order.
    labels: Vec<LabelRegion>,
    source_reference: usize,
    mean_confidence: f64,
}

fn regions(mask: &LabelMask) -> Vec<LabelRegion> {
    let mut ids: Vec<u16> = mask.labels().iter().copied().filter(|&l| l != 0).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|label| LabelRegion {
            label,
            mask: RleMask::encode(&mask.select(label)),
        })
        .collect()
}

pub async fn frame_mask(
    State(state): State<AppState>,
    Path((id, k)): Path<(u64, usize)>,
) -> ApiResult<Json<FrameMaskResponse>> {
    let entry = lookup(&state.0.sequences, id, "sequence")?;
    let snapshot = entry.snapshot();
    if k >= snapshot.frames.len() {
        return Err(ApiError::not_found("frame", k));
    }
    let (result, epoch) = match &snapshot.results {
        Some(results) => (results[k].clone(), snapshot.epoch),
        None => {
            // Before any finished job, reference frames still answer.
            let inner = entry.inner.lock().await;
            match inner.references.get(k) {
                Some(mask) => (
                    FrameResult {
                        mask: mask.clone(),
                        confidence: vec![1.0; mask.labels().len()],
                        source_reference: k,
                    },
                    snapshot.epoch,
                ),
                None => return Err(ApiError::conflict(format!("no propagation result for frame {k} yet"))),
            }
        }
    };
    let (w, h) = result.mask.dims();
    let mean = result.confidence.iter().sum::<f64>() / result.confidence.len() as f64;
    Ok(Json(FrameMaskResponse {
        frame: k,
        epoch,
        size: [h, w],
        labels: regions(&result.mask),
        source_reference: result.source_reference,
        mean_confidence: mean,
    }))
}
