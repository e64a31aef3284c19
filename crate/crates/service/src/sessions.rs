use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use clickmask::geometry::{
    self, delete_vertex, extract_polygons, insert_vertex_on_edge, move_vertex, Point, Polygon, DEFAULT_EPSILON,
};
use clickmask::io::{
    self, decode_image_bytes, export_coco, needs_grid, voc_palette, write_mask, GridLayout, ImageEntry, MaskMode,
    ProjectState, DEFAULT_OVERLAP, DEFAULT_PATCH_SIZE,
};
use clickmask::{
    segment, Category, ClickSet, EdgeMap, EngineOutput, EngineParams, Error, LabelMask, Polarity, RasterImage,
};

use crate::error::{ApiError, ApiResult};
use crate::rle::RleMask;
use crate::{lookup, AppState};

#[derive(Debug, Clone, Serialize)]
pub struct PolygonRecord {
    pub pid: u64,
    pub object_id: u64,
    pub polygon: Polygon,
}

pub struct Session {
    image: Arc<RasterImage>,
    image_path: Option<PathBuf>,
    params: EngineParams,
    clicks: ClickSet,
    output: Option<EngineOutput>,
    /// Edge map of the previous output, zeros at object start.
    prior: EdgeMap,
    polygons: Vec<PolygonRecord>,
    categories: Vec<Category>,
    next_pid: u64,
    next_object: u64,
}

impl Session {
    fn reset_object(&mut self) {
        self.clicks.clear();
        self.output = None;
        self.prior = EdgeMap::zeros(self.image.width(), self.image.height());
    }

    fn stem(&self) -> String {
        self.image_path
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "upload".into())
    }

    fn ensure_category(&mut self, id: u32) -> ApiResult<()> {
        if id == 0 || id > u16::MAX as u32 {
            return Err(ApiError::bad_request(format!("category id {id} outside 1..=65535")));
        }
        if !self.categories.iter().any(|c| c.id == id && !c.deleted) {
            self.categories.retain(|c| c.id != id);
            let palette = voc_palette(id as usize + 1)?;
            self.categories.push(Category::new(id, format!("category {id}"), palette[id as usize]));
        }
        Ok(())
    }
}

async fn lock(state: &AppState, id: u64) -> ApiResult<tokio::sync::OwnedMutexGuard<Session>> {
    let session = lookup(&state.0.sessions, id, "session")?;
    Ok(session.lock_owned().await)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("worker failed: {e}")))
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    image_path: Option<PathBuf>,
    image_base64: Option<String>,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Debug, Serialize)]
pub struct CreateResponse {
    session_id: u64,
    width: usize,
    height: usize,
    channels: usize,
    grid: Option<GridLayout>,
}

/// Request params override the configured defaults field by field.
fn merge_params(defaults: &EngineParams, overrides: Option<Value>) -> ApiResult<EngineParams> {
    let mut base = serde_json::to_value(defaults).expect("engine params serialise");
    match overrides {
        None | Some(Value::Null) => {}
        Some(Value::Object(fields)) => {
            let target = base.as_object_mut().expect("params serialise as an object");
            for (k, v) in fields {
                target.insert(k, v);
            }
        }
        Some(_) => return Err(ApiError::bad_request("params must be an object")),
    }
    let params: EngineParams =
        serde_json::from_value(base).map_err(|e| ApiError::bad_request(format!("params: {e}")))?;
    params.validate()?;
    Ok(params)
}

pub async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> ApiResult<Json<CreateResponse>> {
    let params = merge_params(&state.config().engine, req.params)?;
    let (image, image_path) = match (req.image_path, req.image_base64) {
        (Some(path), None) => {
            let p = path.clone();
            (blocking(move || io::load_image(&p)).await??, Some(path))
        }
        (None, Some(data)) => {
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(data.trim())
                .map_err(|e| ApiError::bad_request(format!("image_base64: {e}")))?;
            (blocking(move || decode_image_bytes(&bytes)).await??, None)
        }
        _ => return Err(ApiError::bad_request("give exactly one of image_path and image_base64")),
    };
    let (w, h) = image.dims();
    let grid = if needs_grid(w, h) {
        Some(GridLayout::new(w, h, DEFAULT_PATCH_SIZE, DEFAULT_OVERLAP)?)
    } else {
        None
    };
    let session = Session {
        image: Arc::new(image),
        image_path,
        params,
        clicks: ClickSet::new(),
        output: None,
        prior: EdgeMap::zeros(w, h),
        polygons: Vec::new(),
        categories: Vec::new(),
        next_pid: 1,
        next_object: 1,
    };
    let channels = session.image.channels();
    let id = state.session_id();
    state
        .0
        .sessions
        .lock()
        .expect("registry lock poisoned")
        .insert(id, Arc::new(tokio::sync::Mutex::new(session)));
    Ok(Json(CreateResponse {
        session_id: id,
        width: w,
        height: h,
        channels,
        grid,
    }))
}

#[derive(Debug, Serialize)]
pub struct SessionInfo {
    session_id: u64,
    width: usize,
    height: usize,
    params: EngineParams,
    click_count: usize,
    polygon_count: usize,
}

pub async fn describe(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<SessionInfo>> {
    let s = lock(&state, id).await?;
    Ok(Json(SessionInfo {
        session_id: id,
        width: s.image.width(),
        height: s.image.height(),
        params: s.params.clone(),
        click_count: s.clicks.len(),
        polygon_count: s.polygons.len(),
    }))
}

pub async fn close(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<StatusCode> {
    let removed = state.0.sessions.lock().expect("registry lock poisoned").remove(&id);
    match removed {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found("session", id)),
    }
}

#[derive(Debug, Deserialize)]
pub struct ClickRequest {
    x: i64,
    y: i64,
    polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSummary {
    mean: f64,
    min: f64,
    max: f64,
    foreground_pixels: usize,
}

#[derive(Debug, Serialize)]
pub struct MaskResponse {
    mask: RleMask,
    confidence: ConfidenceSummary,
    click_count: usize,
}

fn mask_response(s: &Session) -> MaskResponse {
    let (w, h) = s.image.dims();
    match &s.output {
        Some(out) => {
            let c = &out.confidence;
            MaskResponse {
                mask: RleMask::encode(&out.mask),
                confidence: ConfidenceSummary {
                    mean: c.iter().sum::<f64>() / c.len() as f64,
                    min: c.iter().copied().fold(f64::INFINITY, f64::min),
                    max: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    foreground_pixels: out.mask.count(),
                },
                click_count: s.clicks.len(),
            }
        }
        None => MaskResponse {
            mask: RleMask::encode(&clickmask::BinaryMask::empty(w, h)),
            confidence: ConfidenceSummary {
                mean: 0.0,
                min: 0.0,
                max: 0.0,
                foreground_pixels: 0,
            },
            click_count: s.clicks.len(),
        },
    }
}

pub async fn click(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<ClickRequest>,
) -> ApiResult<Json<MaskResponse>> {
    let mut s = lock(&state, id).await?;
    let (w, h) = s.image.dims();
    if req.x < 0 || req.y < 0 || req.x as usize >= w || req.y as usize >= h {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("click ({}, {}) outside {w}x{h} image", req.x, req.y),
        ));
    }
    if s.clicks.is_empty() && !req.polarity.is_positive() {
        return Err(ApiError::conflict("the first click of an object must be positive"));
    }
    let mut clicks = s.clicks.clone();
    clicks.push(req.x as u32, req.y as u32, req.polarity);
    let (params, image, prior) = (s.params.clone(), Arc::clone(&s.image), s.prior.clone());
    let run = clicks.clone();
    let out = blocking(move || segment(&params, &image, &run, &prior)).await??;
    s.prior = out.edge.clone();
    s.output = Some(out);
    s.clicks = clicks;
    Ok(Json(mask_response(&s)))
}

pub async fn undo(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<MaskResponse>> {
    let mut s = lock(&state, id).await?;
    if s.clicks.is_empty() {
        return Err(ApiError::conflict("nothing to undo"));
    }
    let mut clicks = s.clicks.clone();
    clicks.undo();
    if clicks.is_empty() {
        s.reset_object();
        return Ok(Json(mask_response(&s)));
    }
    let (params, image) = (s.params.clone(), Arc::clone(&s.image));
    let all = clicks.clone();
    // Replay the whole chain so the prior matches a fresh session exactly.
    let out = blocking(move || -> clickmask::Result<EngineOutput> {
        let mut prior = EdgeMap::zeros(image.width(), image.height());
        let mut partial = ClickSet::new();
        let mut last = None;
        for c in all.iter() {
            partial.push(c.x, c.y, c.polarity);
            let out = segment(&params, &image, &partial, &prior)?;
            prior = out.edge.clone();
            last = Some(out);
        }
        Ok(last.expect("at least one click"))
    })
    .await??;
    s.prior = out.edge.clone();
    s.output = Some(out);
    s.clicks = clicks;
    Ok(Json(mask_response(&s)))
}

#[derive(Debug, Deserialize)]
pub struct FinishRequest {
    category_id: u32,
    epsilon: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FinishResponse {
    object_id: u64,
    polygons: Vec<PolygonRecord>,
}

pub async fn finish(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<FinishRequest>,
) -> ApiResult<Json<FinishResponse>> {
    let mut s = lock(&state, id).await?;
    let epsilon = req.epsilon.unwrap_or(DEFAULT_EPSILON);
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(ApiError::bad_request(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let mask = match &s.output {
        Some(out) if !out.mask.is_empty() => out.mask.clone(),
        _ => return Err(ApiError::conflict("current mask is empty")),
    };
    s.ensure_category(req.category_id)?;
    let polygons = extract_polygons(&mask, epsilon, req.category_id);
    let object_id = s.next_object;
    s.next_object += 1;
    let mut records = Vec::with_capacity(polygons.len());
    for polygon in polygons {
        let record = PolygonRecord {
            pid: s.next_pid,
            object_id,
            polygon,
        };
        s.next_pid += 1;
        records.push(record.clone());
        s.polygons.push(record);
    }
    s.reset_object();
    Ok(Json(FinishResponse {
        object_id,
        polygons: records,
    }))
}

pub async fn list_polygons(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Vec<PolygonRecord>>> {
    let s = lock(&state, id).await?;
    Ok(Json(s.polygons.clone()))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EditRequest {
    Move { index: usize, x: f64, y: f64 },
    Delete { index: usize },
    Insert { edge: usize, x: f64, y: f64 },
}

pub async fn edit_polygon(
    State(state): State<AppState>,
    Path((id, pid)): Path<(u64, u64)>,
    Json(req): Json<EditRequest>,
) -> ApiResult<Json<PolygonRecord>> {
    let mut s = lock(&state, id).await?;
    let bounds = s.image.dims();
    let record = s
        .polygons
        .iter_mut()
        .find(|r| r.pid == pid)
        .ok_or_else(|| ApiError::not_found("polygon", pid))?;
    let edited = match req {
        EditRequest::Move { index, x, y } => move_vertex(&record.polygon, index, Point::new(x, y), bounds),
        EditRequest::Delete { index } => delete_vertex(&record.polygon, index),
        EditRequest::Insert { edge, x, y } => insert_vertex_on_edge(&record.polygon, edge, Point::new(x, y)),
    }?;
    record.polygon = edited;
    Ok(Json(record.clone()))
}

pub async fn list_categories(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Vec<Category>>> {
    let s = lock(&state, id).await?;
    Ok(Json(s.categories.iter().filter(|c| !c.deleted).cloned().collect()))
}

#[derive(Debug, Deserialize)]
pub struct CategoryRequest {
    id: u32,
    comment: String,
    color: Option<[u8; 3]>,
}

pub async fn add_category(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<CategoryRequest>,
) -> ApiResult<(StatusCode, Json<Category>)> {
    let mut s = lock(&state, id).await?;
    if req.id == 0 || req.id > u16::MAX as u32 {
        return Err(ApiError::bad_request(format!("category id {} outside 1..=65535", req.id)));
    }
    if req.comment.contains('|') || req.comment.contains('\n') {
        return Err(ApiError::bad_request("category comment may not contain '|' or line breaks"));
    }
    if s.categories.iter().any(|c| c.id == req.id && !c.deleted) {
        return Err(ApiError::conflict(format!("category {} already exists", req.id)));
    }
    let color = match req.color {
        Some(c) => c,
        None => voc_palette(req.id as usize + 1)?[req.id as usize],
    };
    let category = Category::new(req.id, req.comment, color);
    s.categories.retain(|c| c.id != req.id);
    s.categories.push(category.clone());
    Ok((StatusCode::CREATED, Json(category)))
}

pub async fn delete_category(
    State(state): State<AppState>,
    Path((id, cid)): Path<(u64, u32)>,
) -> ApiResult<StatusCode> {
    let mut s = lock(&state, id).await?;
    if s.polygons.iter().any(|r| r.polygon.category_id == cid) {
        return Err(ApiError::conflict(format!("category {cid} is still used by polygons")));
    }
    let c = s
        .categories
        .iter_mut()
        .find(|c| c.id == cid && !c.deleted)
        .ok_or_else(|| ApiError::not_found("category", cid))?;
    c.deleted = true;
    Ok(StatusCode::NO_CONTENT)
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
pub struct SaveRequest {
    #[serde(default = "default_true")]
    grayscale: bool,
    #[serde(default)]
    pseudocolor: bool,
    #[serde(default)]
    coco: bool,
    dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct SaveResponse {
    paths: Vec<PathBuf>,
}

fn storage_error(e: Error) -> ApiError {
    match e {
        Error::Io { .. } => ApiError::new(StatusCode::INSUFFICIENT_STORAGE, e.to_string()),
        other => other.into(),
    }
}

pub async fn save(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    Json(req): Json<SaveRequest>,
) -> ApiResult<Json<SaveResponse>> {
    let s = lock(&state, id).await?;
    let dir = req
        .dir
        .or_else(|| state.config().save_dir.clone())
        .ok_or_else(|| ApiError::bad_request("no save directory given or configured"))?;
    if !(req.grayscale || req.pseudocolor || req.coco) {
        return Err(ApiError::bad_request("no output format selected"));
    }
    let (w, h) = s.image.dims();
    let polygons: Vec<Polygon> = s.polygons.iter().map(|r| r.polygon.clone()).collect();
    // Finished polygons take precedence; an unfinished mask is saved as
    // label 1 when nothing has been finished yet.
    let mask: LabelMask = if !polygons.is_empty() {
        geometry::rasterize(&polygons, w, h)
    } else {
        match &s.output {
            Some(out) if !out.mask.is_empty() => out.mask.to_label_mask(1),
            _ => return Err(ApiError::conflict("nothing to save")),
        }
    };
    let stem = s.stem();
    let mut project = ProjectState::default();
    if req.coco {
        let path = s.image_path.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.png")));
        project.add_image(ImageEntry::new(path, w, h))?;
        for c in s.categories.iter().filter(|c| !c.deleted) {
            project.add_category(c.clone())?;
        }
        project.set_polygons(0, polygons)?;
    }
    let flags = (req.grayscale, req.pseudocolor, req.coco);
    let paths = blocking(move || -> Result<Vec<PathBuf>, Error> {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        let mut paths = Vec::new();
        if flags.0 {
            let p = dir.join(format!("{stem}.png"));
            write_mask(&mask, MaskMode::Grayscale, &p)?;
            paths.push(p);
        }
        if flags.1 {
            let p = dir.join(format!("{stem}_pseudo.png"));
            write_mask(&mask, MaskMode::Pseudocolor, &p)?;
            paths.push(p);
        }
        if flags.2 {
            let p = dir.join(format!("{stem}_coco.json"));
            export_coco(&project)?.save(&p)?;
            paths.push(p);
        }
        Ok(paths)
    })
    .await?
    .map_err(storage_error)?;
    Ok(Json(SaveResponse { paths }))
}
