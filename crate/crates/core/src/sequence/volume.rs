//! 3D scalar volumes and their conversion to and from frame sequences.
//!
//! On-disk header (`key=value` lines) next to a raw little-endian 16-bit
//! file with x varying fastest, then y, then z:
//!
//! ```text
//! dims=256,256,40
//! spacing=0.8,0.8,2.5
//! bit_depth=16
//! byte_order=little
//! data=scan.raw
//! ```
//!
//! A directory of single-channel PNG slices (sorted by name, stacked along
//! z) is accepted as well.

use std::fs;
use std::path::{Path, PathBuf};

use super::FrameSequence;
use crate::error::{Error, Result};
use crate::io::image::{parse_key_values, parse_num, required};
use crate::io::{is_supported_image, load_image, save_png};
use crate::raster::{BitDepth, LabelMask, RasterImage};

const WHAT: &str = "volume header";

#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    /// `[X, Y, Z]`.
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// x fastest, then y, then z.
    pub data: Vec<u16>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<u16>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid("volume", format!("dims {dims:?} must be positive")));
        }
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::invalid("volume", format!("{} samples for dims {dims:?}", data.len())));
        }
        Ok(Volume { dims, spacing, data })
    }

    #[inline]
    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.data[self.index(x, y, z)]
    }
}

/// Frame geometry for slicing along `axis`: (frame count, width, height).
fn slice_shape(dims: [usize; 3], axis: usize) -> Result<(usize, usize, usize)> {
    match axis {
        0 => Ok((dims[0], dims[1], dims[2])),
        1 => Ok((dims[1], dims[0], dims[2])),
        2 => Ok((dims[2], dims[0], dims[1])),
        _ => Err(Error::invalid("axis", format!("{axis} (expected 0, 1 or 2)"))),
    }
}

/// Volume coordinates of pixel `(u, v)` in slice `s`.
fn voxel(axis: usize, s: usize, u: usize, v: usize) -> (usize, usize, usize) {
    match axis {
        0 => (s, u, v),
        1 => (u, s, v),
        _ => (u, v, s),
    }
}

/// Slices along `axis`. Axis 0 yields X frames of Y×Z, axis 1 yields Y
/// frames of X×Z, axis 2 yields Z frames of X×Y.
pub fn volume_to_frames(volume: &Volume, axis: usize) -> Result<FrameSequence> {
    let (n, w, h) = slice_shape(volume.dims, axis)?;
    let frames = (0..n)
        .map(|s| {
            let mut samples = Vec::with_capacity(w * h);
            for v in 0..h {
                for u in 0..w {
                    let (x, y, z) = voxel(axis, s, u, v);
                    samples.push(volume.get(x, y, z));
                }
            }
            RasterImage::new(w, h, 1, BitDepth::Sixteen, samples)
        })
        .collect::<Result<_>>()?;
    FrameSequence::new(frames, volume.spacing[axis])
}

/// Stacks per-slice masks back into a volume (inverse of
/// [`volume_to_frames`] for the same axis). Spacing defaults to 1.
pub fn frames_to_volume(masks: &[LabelMask], axis: usize) -> Result<Volume> {
    let first = masks
        .first()
        .ok_or_else(|| Error::invalid("volume", "needs at least one frame"))?;
    let (w, h) = first.dims();
    if let Some(m) = masks.iter().find(|m| m.dims() != (w, h)) {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: m.dims(),
        });
    }
    let n = masks.len();
    let dims = match axis {
        0 => [n, w, h],
        1 => [w, n, h],
        2 => [w, h, n],
        _ => return Err(Error::invalid("axis", format!("{axis} (expected 0, 1 or 2)"))),
    };
    let mut data = vec![0u16; n * w * h];
    for (s, m) in masks.iter().enumerate() {
        for v in 0..h {
            for u in 0..w {
                let (x, y, z) = voxel(axis, s, u, v);
                data[(z * dims[1] + y) * dims[0] + x] = m.get(u, v);
            }
        }
    }
    Volume::new(dims, [1.0; 3], data)
}

fn parse_triple<T: std::str::FromStr>(v: &str, key: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = v.split(',').map(|p| parse_num(p.trim(), key, WHAT)).collect::<Result<_>>()?;
    parts
        .try_into()
        .map_err(|_| Error::invalid(WHAT, format!("{key}={v:?} needs three values")))
}

/// Header fields: dims, spacing and the raw data path.
pub fn read_volume_header(path: &Path) -> Result<([usize; 3], [f64; 3], PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kv = parse_key_values(&text, WHAT)?;
    let dims = parse_triple(required(&kv, "dims", WHAT)?, "dims")?;
    let spacing = match kv.iter().find(|(k, _)| k == "spacing") {
        Some((_, v)) => parse_triple(v, "spacing")?,
        None => [1.0; 3],
    };
    let bits: u32 = parse_num(required(&kv, "bit_depth", WHAT)?, "bit_depth", WHAT)?;
    if bits != 16 {
        return Err(Error::UnsupportedFormat(format!("volume bit_depth={bits} (only 16)")));
    }
    let order = required(&kv, "byte_order", WHAT)?;
    if order != "little" {
        return Err(Error::UnsupportedFormat(format!("byte_order={order} (only little)")));
    }
    let data = match kv.iter().find(|(k, _)| k == "data") {
        Some((_, v)) => path.parent().unwrap_or(Path::new(".")).join(v),
        None => path.with_extension("raw"),
    };
    Ok((dims, spacing, data))
}

/// Reads a header + raw volume, or a directory of PNG slices.
pub fn read_volume(path: &Path) -> Result<Volume> {
    if path.is_dir() {
        return read_slice_dir(path);
    }
    let (dims, spacing, raw_path) = read_volume_header(path)?;
    let raw = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let expected = dims.iter().product::<usize>() * 2;
    if raw.len() != expected {
        return Err(Error::Decode {
            path: raw_path,
            reason: format!("{} bytes, header implies {expected}", raw.len()),
        });
    }
    let data = raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Volume::new(dims, spacing, data)
}

fn read_slice_dir(dir: &Path) -> Result<Volume> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    paths.sort();
    let mut slices = Vec::with_capacity(paths.len());
    for p in &paths {
        let img = load_image(p)?;
        if img.channels() != 1 {
            return Err(Error::invalid("volume slice", format!("{} has {} channels", p.display(), img.channels())));
        }
        slices.push(LabelMask::new(img.width(), img.height(), img.into_samples())?);
    }
    if slices.is_empty() {
        return Err(Error::invalid("volume", format!("no slices in {}", dir.display())));
    }
    frames_to_volume(&slices, 2)
}

/// Writes `path` (header) and a sibling `.raw` file.
pub fn write_volume(volume: &Volume, path: &Path) -> Result<()> {
    let raw_path = path.with_extension("raw");
    let raw_name = raw_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::invalid("volume path", path.display().to_string()))?;
    let [x, y, z] = volume.dims;
    let [sx, sy, sz] = volume.spacing;
    let header = format!("dims={x},{y},{z}\nspacing={sx},{sy},{sz}\nbit_depth=16\nbyte_order=little\ndata={raw_name}\n");
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    let bytes: Vec<u8> = volume.data.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(&raw_path, bytes).map_err(|e| Error::io(&raw_path, e))
}

/// Writes z-slices as `slice_0000.png`, ... (16-bit greyscale).
pub fn write_slice_dir(volume: &Volume, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seq = volume_to_frames(volume, 2)?;
    seq.frames()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let p = dir.join(format!("slice_{i:04}.png"));
            save_png(f, &p)?;
            Ok(p)
        })
        .collect()
}
