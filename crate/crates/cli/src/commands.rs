use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clickmask::geometry::extract_polygons;
use clickmask::io::{self, export_coco, read_mask, save_png, voc_palette, write_mask, ImageEntry, MaskMode, ProjectState};
use clickmask::sequence::{self, FrameSequence, PropagationParams, ReferenceSet};
use clickmask::simclick::{evaluate_dataset, EvalEngine, Protocol};
use clickmask::{Category, ClickSet, EdgeMap, EngineKind, EngineParams, Error, LabelMask, Polarity};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SolverNonConvergence { .. } | Error::Session { .. } | Error::Propagation { .. } => {
                CliError::Runtime(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn engine_params(id: &str, seed_radius: Option<u32>) -> Result<EngineParams, CliError> {
    let kind: EngineKind = id.parse()?;
    let mut params = EngineParams::new(kind);
    if let Some(r) = seed_radius {
        params.seed_radius = r;
    }
    Ok(params)
}

fn parse_thresholds(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| input(format!("bad threshold {t:?} in --thresholds")))
        })
        .collect()
}

/// Sibling path `<stem>_miou.csv` for the curve output.
fn miou_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "eval".into());
    out.with_file_name(format!("{stem}_miou.csv"))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| input(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

pub fn eval(
    dataset: &Path,
    engine: &str,
    max_clicks: usize,
    thresholds: &str,
    workers: usize,
    seed_radius: Option<u32>,
    out: &Path,
) -> CliResult {
    let engine = if engine == "oracle" {
        EvalEngine::Oracle
    } else {
        EvalEngine::Classical(engine_params(engine, seed_radius)?)
    };
    let protocol = Protocol {
        max_clicks,
        thresholds: parse_thresholds(thresholds)?,
    };
    let report = evaluate_dataset(&engine, dataset, &protocol, workers)?;
    write_text(out, &report.instances_csv())?;
    write_text(&miou_path(out), &report.miou_csv())?;
    for (t, noc) in report.thresholds.iter().zip(&report.mean_noc) {
        println!("NoC@{:.0}: {noc:.3}", t * 100.0);
    }
    println!("instances: {}, skipped: {}", report.traces.len(), report.skipped.len());
    for s in &report.skipped {
        eprintln!("skipped {}: {}", s.instance, s.reason);
    }
    Ok(())
}

/// Parses `x,y,+;x,y,-`. Whitespace around items is ignored.
pub fn parse_clicks(s: &str) -> Result<ClickSet, CliError> {
    let mut clicks = ClickSet::new();
    for item in s.split(';').map(str::trim).filter(|i| !i.is_empty()) {
        let parts: Vec<&str> = item.split(',').map(str::trim).collect();
        let [x, y, sign] = parts[..] else {
            return Err(input(format!("click {item:?} is not x,y,+ or x,y,-")));
        };
        let coord = |v: &str| v.parse::<u32>().map_err(|_| input(format!("bad coordinate {v:?} in click {item:?}")));
        let polarity = match sign {
            "+" => Polarity::Positive,
            "-" => Polarity::Negative,
            other => return Err(input(format!("bad polarity {other:?} in click {item:?} (use + or -)"))),
        };
        clicks.push(coord(x)?, coord(y)?, polarity);
    }
    match clicks.iter().next() {
        None => Err(input("no clicks given")),
        Some(c) if !c.polarity.is_positive() => Err(input("the first click must be positive")),
        Some(_) => Ok(clicks),
    }
}

pub fn segment(image: &Path, clicks: &str, engine: &str, seed_radius: Option<u32>, out: &Path) -> CliResult {
    let params = engine_params(engine, seed_radius)?;
    let clicks = parse_clicks(clicks)?;
    let image = io::load_image(image)?;
    let prior = EdgeMap::zeros(image.width(), image.height());
    let output = clickmask::segment(&params, &image, &clicks, &prior).map_err(|e| match e {
        Error::SolverNonConvergence { .. } => CliError::Runtime(e.to_string()),
        other => other.into(),
    })?;
    write_mask(&output.mask.to_label_mask(255), MaskMode::Grayscale, out)?;
    println!("{} foreground pixels -> {}", output.mask.count(), out.display());
    Ok(())
}

/// Parses `0:a.png,12:b.png`.
pub fn parse_refs(s: &str) -> Result<Vec<(usize, PathBuf)>, CliError> {
    let refs: Vec<(usize, PathBuf)> = s
        .split(',')
        .map(str::trim)
        .filter(|i| !i.is_empty())
        .map(|item| {
            let (k, path) = item
                .split_once(':')
                .ok_or_else(|| input(format!("reference {item:?} is not frame:path")))?;
            let k = k
                .trim()
                .parse()
                .map_err(|_| input(format!("bad frame index {k:?} in reference {item:?}")))?;
            Ok((k, PathBuf::from(path.trim())))
        })
        .collect::<Result<_, CliError>>()?;
    if refs.is_empty() {
        return Err(input("no reference masks given"));
    }
    Ok(refs)
}

pub fn propagate(frames: &Path, refs: &str, out: &Path, tau: Option<f64>, refine: bool) -> CliResult {
    let refs = parse_refs(refs)?;
    let sequence = FrameSequence::load_dir(frames)?;
    let mut references = ReferenceSet::new();
    for (k, path) in refs {
        references.insert(k, read_mask(&path)?);
    }
    let mut params = PropagationParams {
        refine_with_graphcut: refine,
        ..PropagationParams::default()
    };
    if let Some(t) = tau {
        params.tau = t;
    }
    let results = sequence::propagate(&sequence, &references, &params)?;
    let masks: Vec<LabelMask> = results.into_iter().map(|r| r.mask).collect();
    let written = sequence::write_frame_masks(&masks, out)?;
    println!("wrote {} frame masks to {}", written.len(), out.display());
    Ok(())
}

pub fn volume_to_frames(input_path: &Path, axis: usize, out: &Path) -> CliResult {
    let volume = sequence::read_volume(input_path)?;
    let seq = sequence::volume_to_frames(&volume, axis)?;
    fs::create_dir_all(out).map_err(|e| input(format!("{}: {e}", out.display())))?;
    for (i, f) in seq.frames().iter().enumerate() {
        save_png(f, &out.join(format!("frame_{i:04}.png")))?;
    }
    println!("wrote {} frames to {}", seq.len(), out.display());
    Ok(())
}

pub fn frames_to_volume(frames: &Path, axis: usize, out: &Path) -> CliResult {
    let seq = FrameSequence::load_dir(frames)?;
    let slices = seq
        .frames()
        .iter()
        .map(|f| {
            if f.channels() != 1 {
                return Err(input(format!("frames must be single-channel, found {} channels", f.channels())));
            }
            Ok(LabelMask::new(f.width(), f.height(), f.samples().to_vec())?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let volume = sequence::frames_to_volume(&slices, axis)?;
    sequence::write_volume(&volume, out)?;
    println!("wrote {:?} volume to {}", volume.dims, out.display());
    Ok(())
}

pub fn mask_to_coco(masks: &Path, epsilon: f64, out: &Path) -> CliResult {
    let mut paths: Vec<PathBuf> = fs::read_dir(masks)
        .map_err(|e| input(format!("{}: {e}", masks.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(input(format!("no PNG masks in {}", masks.display())));
    }
    let mut project = ProjectState::default();
    let mut per_image = Vec::with_capacity(paths.len());
    for path in &paths {
        let mask = read_mask(path)?;
        let mut labels: Vec<u16> = mask.labels().iter().copied().filter(|&l| l != 0).collect();
        labels.sort_unstable();
        labels.dedup();
        let polygons: Vec<_> = labels
            .iter()
            .flat_map(|&l| extract_polygons(&mask.select(l), epsilon, l as u32))
            .collect();
        for &l in &labels {
            if project.live_category(l as u32).is_none() {
                let color = voc_palette(l as usize + 1)?[l as usize];
                project.add_category(Category::new(l as u32, format!("category {l}"), color))?;
            }
        }
        let index = project.add_image(ImageEntry::new(path.clone(), mask.width(), mask.height()))?;
        per_image.push((index, polygons));
    }
    project.categories.sort_by_key(|c| c.id);
    for (index, polygons) in per_image {
        project.set_polygons(index, polygons)?;
    }
    let doc = export_coco(&project)?;
    doc.save(out)?;
    println!("{} annotations over {} images -> {}", doc.annotations.len(), doc.images.len(), out.display());
    Ok(())
}

pub fn serve(host: &str, port: u16, engine: &str, save_dir: Option<PathBuf>, workers: usize) -> CliResult {
    let config = clickmask_service::ServiceConfig {
        engine: engine_params(engine, None)?,
        save_dir,
        workers,
        first_id: 1,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| input(format!("cannot bind {host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("listening on {addr}");
        clickmask_service::serve(listener, config, shutdown_signal())
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
