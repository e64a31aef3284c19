//! HTTP API over the clickmask engines.
//!
//! Image sessions (`/sessions/...`) carry one object at a time through the
//! click loop and collect finished polygons; sequence sessions
//! (`/sequences/...`) hold a frame stack, reference masks and the result of
//! the last propagation job. All payloads are JSON and masks travel as
//! run-length encodings (see [`RleMask`]).

mod error;
mod rle;
mod sequences;
mod sessions;

use std::collections::HashMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::DefaultBodyLimit;
use axum::routing::{get, patch, post};
use axum::Router;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;

use clickmask::EngineParams;

pub use error::ApiError;
pub use rle::RleMask;

/// Uploaded images arrive base64-encoded inside JSON; 4096×3000 RGB PNGs
/// fit comfortably.
const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Defaults for new sessions; request params override field by field.
    pub engine: EngineParams,
    /// Used by `save` when the request names no directory.
    pub save_dir: Option<PathBuf>,
    /// Propagation jobs allowed to run at once.
    pub workers: usize,
    /// First session / sequence id handed out.
    pub first_id: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            engine: EngineParams::default(),
            save_dir: None,
            workers: 2,
            first_id: 1,
        }
    }
}

type Registry<T> = Mutex<HashMap<u64, Arc<T>>>;

pub(crate) struct Shared {
    config: ServiceConfig,
    next_session: AtomicU64,
    next_sequence: AtomicU64,
    sessions: Registry<tokio::sync::Mutex<sessions::Session>>,
    sequences: Registry<sequences::SequenceEntry>,
    propagation_slots: Arc<Semaphore>,
}

/// Cheap to clone; all clones share the same sessions.
#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        let workers = config.workers.max(1);
        AppState(Arc::new(Shared {
            next_session: AtomicU64::new(config.first_id),
            next_sequence: AtomicU64::new(config.first_id),
            config,
            sessions: Mutex::new(HashMap::new()),
            sequences: Mutex::new(HashMap::new()),
            propagation_slots: Arc::new(Semaphore::new(workers)),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    fn session_id(&self) -> u64 {
        self.0.next_session.fetch_add(1, Ordering::Relaxed)
    }

    fn sequence_id(&self) -> u64 {
        self.0.next_sequence.fetch_add(1, Ordering::Relaxed)
    }
}

fn lookup<T>(registry: &Registry<T>, id: u64, what: &str) -> Result<Arc<T>, ApiError> {
    registry
        .lock()
        .expect("registry lock poisoned")
        .get(&id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(what, id))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(sessions::create))
        .route("/sessions/{id}", get(sessions::describe).delete(sessions::close))
        .route("/sessions/{id}/clicks", post(sessions::click))
        .route("/sessions/{id}/undo", post(sessions::undo))
        .route("/sessions/{id}/finish", post(sessions::finish))
        .route("/sessions/{id}/polygons", get(sessions::list_polygons))
        .route("/sessions/{id}/polygons/{pid}", patch(sessions::edit_polygon))
        .route("/sessions/{id}/categories", get(sessions::list_categories).post(sessions::add_category))
        .route("/sessions/{id}/categories/{cid}", axum::routing::delete(sessions::delete_category))
        .route("/sessions/{id}/save", post(sessions::save))
        .route("/sequences", post(sequences::create))
        .route("/sequences/{id}/references", post(sequences::add_reference))
        .route("/sequences/{id}/propagate", post(sequences::propagate))
        .route("/sequences/{id}/status", get(sequences::status))
        .route("/sequences/{id}/frames/{k}/mask", get(sequences::frame_mask))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until `shutdown` resolves, then stops accepting connections and
/// lets in-flight requests (saves included) finish.
pub async fn serve(
    listener: TcpListener,
    config: ServiceConfig,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(AppState::new(config)))
        .with_graceful_shutdown(shutdown)
        .await
}
