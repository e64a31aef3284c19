//! Dataset-level evaluation over the paired directory layout
//!
//! ```text
//! <root>/images/<name>.(png|ppm|pgm)
//! <root>/masks/<name>.png          one instance
//! <root>/masks/<name>__<k>.png     several instances of one image
//! ```
//!
//! Masks are 8-bit; any nonzero pixel is foreground.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_session, OracleEngine, Protocol, SessionTrace};
use crate::engines::EngineParams;
use crate::error::{Error, Result};
use crate::io::{self, MaskMode};
use crate::raster::{BinaryMask, LabelMask, RasterImage};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pgm"];
const INSTANCE_SEPARATOR: &str = "__";

#[derive(Debug, Clone)]
pub enum EvalEngine {
    Classical(EngineParams),
    /// Returns the ground truth; used to validate the harness itself.
    Oracle,
}

impl EvalEngine {
    pub fn id(&self) -> &str {
        match self {
            EvalEngine::Classical(p) => p.engine.id(),
            EvalEngine::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedInstance {
    pub instance: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub dataset_id: String,
    pub engine_id: String,
    pub thresholds: Vec<f64>,
    pub max_clicks: usize,
    /// Mean NoC per threshold, in `thresholds` order.
    pub mean_noc: Vec<f64>,
    /// Instances that never reached each threshold.
    pub failure_count: Vec<usize>,
    /// Mean IoU after click k (index k - 1).
    pub miou_curve: Vec<f64>,
    /// Sorted by instance id.
    pub traces: Vec<SessionTrace>,
    pub skipped: Vec<SkippedInstance>,
}

impl BenchmarkReport {
    /// Aggregates traces; the reduction runs over instances sorted by id so
    /// it does not depend on evaluation order.
    pub fn aggregate(
        dataset_id: &str,
        engine_id: &str,
        protocol: &Protocol,
        mut traces: Vec<SessionTrace>,
        skipped: Vec<SkippedInstance>,
    ) -> Result<Self> {
        if traces.is_empty() {
            return Err(Error::Dataset(format!("{dataset_id}: no instance could be evaluated")));
        }
        traces.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        let n = traces.len() as f64;
        let mean_noc = (0..protocol.thresholds.len())
            .map(|t| traces.iter().map(|tr| tr.outcomes[t].noc as f64).sum::<f64>() / n)
            .collect();
        let failure_count = (0..protocol.thresholds.len())
            .map(|t| traces.iter().filter(|tr| !tr.outcomes[t].reached).count())
            .collect();
        let miou_curve = (0..protocol.max_clicks)
            .map(|k| traces.iter().map(|tr| tr.iou_after_click[k]).sum::<f64>() / n)
            .collect();
        Ok(BenchmarkReport {
            dataset_id: dataset_id.to_string(),
            engine_id: engine_id.to_string(),
            thresholds: protocol.thresholds.clone(),
            max_clicks: protocol.max_clicks,
            mean_noc,
            failure_count,
            miou_curve,
            traces,
            skipped,
        })
    }

    /// Per-instance CSV (`instance,noc85,noc90,iou1..iouN`) followed by a
    /// `mean` summary row.
    pub fn instances_csv(&self) -> String {
        let mut out = String::from("instance");
        for t in &self.thresholds {
            write!(out, ",noc{}", threshold_tag(*t)).unwrap();
        }
        for k in 1..=self.max_clicks {
            write!(out, ",iou{k}").unwrap();
        }
        out.push('\n');
        for tr in &self.traces {
            out.push_str(&csv_field(&tr.instance_id));
            for o in &tr.outcomes {
                write!(out, ",{}", o.noc).unwrap();
            }
            for v in &tr.iou_after_click {
                write!(out, ",{v:.6}").unwrap();
            }
            out.push('\n');
        }
        out.push_str("mean");
        for v in &self.mean_noc {
            write!(out, ",{v:.6}").unwrap();
        }
        for v in &self.miou_curve {
            write!(out, ",{v:.6}").unwrap();
        }
        out.push('\n');
        out
    }

    /// `click,miou` rows for plotting.
    pub fn miou_csv(&self) -> String {
        let mut out = String::from("click,miou\n");
        for (k, v) in self.miou_curve.iter().enumerate() {
            writeln!(out, "{},{v:.6}", k + 1).unwrap();
        }
        out
    }
}

fn threshold_tag(t: f64) -> String {
    let pct = t * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        format!("{pct}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One (image, instance mask) pair found on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceEntry {
    pub instance_id: String,
    pub image: Option<PathBuf>,
    pub mask: PathBuf,
}

/// Pairs every mask under `<root>/masks` with its image. Masks whose image
/// is missing are returned with `image: None`.
pub fn scan_dataset(root: &Path) -> Result<Vec<InstanceEntry>> {
    let images_dir = root.join("images");
    let masks_dir = root.join("masks");
    for dir in [&images_dir, &masks_dir] {
        if !dir.is_dir() {
            return Err(Error::Dataset(format!("missing directory {}", dir.display())));
        }
    }
    let mut images = Vec::new();
    for entry in fs::read_dir(&images_dir).map_err(|e| Error::io(&images_dir, e))? {
        let path = entry.map_err(|e| Error::io(&images_dir, e))?.path();
        if has_extension(&path, &IMAGE_EXTENSIONS) {
            images.push(path);
        }
    }
    images.sort();

    let mut masks = Vec::new();
    for entry in fs::read_dir(&masks_dir).map_err(|e| Error::io(&masks_dir, e))? {
        let path = entry.map_err(|e| Error::io(&masks_dir, e))?.path();
        if has_extension(&path, &["png"]) {
            masks.push(path);
        }
    }
    masks.sort();

    let entries: Vec<InstanceEntry> = masks
        .into_iter()
        .map(|mask| {
            let instance_id = file_stem(&mask);
            let image_stem = instance_id
                .split_once(INSTANCE_SEPARATOR)
                .map_or(instance_id.as_str(), |(stem, _)| stem)
                .to_string();
            let image = images.iter().find(|p| file_stem(p) == image_stem).cloned();
            InstanceEntry {
                instance_id,
                image,
                mask,
            }
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::Dataset(format!("{} contains no instance masks", root.display())));
    }
    Ok(entries)
}

/// Runs one session per instance on `workers` threads. Unreadable or
/// mismatched pairs are skipped and listed in the report; an engine failure
/// aborts the whole evaluation.
pub fn evaluate_dataset(
    engine: &EvalEngine,
    root: &Path,
    protocol: &Protocol,
    workers: usize,
) -> Result<BenchmarkReport> {
    protocol.validate()?;
    let entries = scan_dataset(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Dataset(format!("cannot start worker pool: {e}")))?;

    let results: Vec<Result<std::result::Result<SessionTrace, SkippedInstance>>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let (image, gt) = match load_instance(entry) {
                    Ok(pair) => pair,
                    Err(e) => {
                        return Ok(Err(SkippedInstance {
                            instance: entry.instance_id.clone(),
                            reason: e.to_string(),
                        }))
                    }
                };
                let trace = match engine {
                    EvalEngine::Classical(params) => run_session(params, &entry.instance_id, &image, &gt, protocol),
                    EvalEngine::Oracle => {
                        run_session(&OracleEngine { gt: gt.clone() }, &entry.instance_id, &image, &gt, protocol)
                    }
                }?;
                Ok(Ok(trace))
            })
            .collect()
    });

    let mut traces = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r? {
            Ok(trace) => traces.push(trace),
            Err(skip) => skipped.push(skip),
        }
    }
    let dataset_id = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| root.display().to_string());
    BenchmarkReport::aggregate(&dataset_id, engine.id(), protocol, traces, skipped)
}

fn load_instance(entry: &InstanceEntry) -> Result<(RasterImage, BinaryMask)> {
    let image_path = entry
        .image
        .as_ref()
        .ok_or_else(|| Error::Dataset(format!("no image for mask {}", entry.mask.display())))?;
    let image = io::load_image(image_path)?;
    let gt = io::read_mask(&entry.mask)?.foreground();
    if gt.dims() != image.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            actual: gt.dims(),
        });
    }
    if gt.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    Ok((image, gt))
}

/// Splits a multi-object label mask into one binary mask per label id, in
/// increasing id order. Background (0) and `ignore` are dropped.
pub fn split_instances(mask: &LabelMask, ignore: Option<u16>) -> Vec<(u16, BinaryMask)> {
    let mut ids: Vec<u16> = mask.labels().to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .filter(|&l| l != 0 && Some(l) != ignore)
        .map(|l| (l, mask.select(l)))
        .collect()
}

/// Converts a multi-object layout (Pascal VOC / DAVIS style: one label
/// image per picture, object ids as pixel values) into the paired
/// instance layout. VOC's 255 "void" label is ignored. Returns the number
/// of instance masks written.
pub fn convert_multi_object(images_dir: &Path, labels_dir: &Path, out_root: &Path) -> Result<usize> {
    let out_images = out_root.join("images");
    let out_masks = out_root.join("masks");
    for dir in [&out_images, &out_masks] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut labels: Vec<PathBuf> = fs::read_dir(labels_dir)
        .map_err(|e| Error::io(labels_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| has_extension(p, &["png"]))
        .collect();
    labels.sort();
    let mut written = 0;
    for label_path in labels {
        let stem = file_stem(&label_path);
        let Some(image_path) = IMAGE_EXTENSIONS
            .iter()
            .map(|ext| images_dir.join(format!("{stem}.{ext}")))
            .find(|p| p.is_file())
        else {
            continue;
        };
        let dest = out_images.join(image_path.file_name().expect("joined path has a file name"));
        fs::copy(&image_path, &dest).map_err(|e| Error::io(&dest, e))?;
        let mask = io::read_mask(&label_path)?;
        for (label, instance) in split_instances(&mask, Some(255)) {
            let path = out_masks.join(format!("{stem}{INSTANCE_SEPARATOR}{label}.png"));
            io::write_mask(&instance.to_label_mask(255), MaskMode::Grayscale, &path)?;
            written += 1;
        }
    }
    Ok(written)
}

fn has_extension(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
