//! Raster decoding and encoding.
//!
//! PNG (8/16-bit, 1–4 channels) and binary PNM go through the `image` and
//! `png` crates. Multi-band rasters use a small container: a `<name>.bands`
//! text header of `key=value` lines plus a `<name>.raw` file of
//! channel-interleaved little-endian samples.
//!
//! ```text
//! width=512
//! height=512
//! channels=5
//! bit_depth=16
//! byte_order=little
//! ```

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::raster::{BitDepth, LabelMask, RasterImage};

pub const BANDS_EXTENSION: &str = "bands";

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

pub fn is_supported_image(path: &Path) -> bool {
    matches!(extension(path).as_str(), "png" | "ppm" | "pgm" | "pnm" | BANDS_EXTENSION)
}

/// Decodes an image without changing its bit depth or channel count.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    match extension(path).as_str() {
        "png" | "ppm" | "pgm" | "pnm" => decode_with_image_crate(path),
        BANDS_EXTENSION => load_bands(path),
        other => Err(Error::UnsupportedFormat(format!(
            "{} (extension {other:?})",
            path.display()
        ))),
    }
}

fn decode_with_image_crate(path: &Path) -> Result<RasterImage> {
    let reader = ImageReader::open(path).map_err(|e| Error::io(path, e))?;
    let reader = reader.with_guessed_format().map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    from_dynamic(img).map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

/// Decodes an in-memory PNG or PNM file (e.g. an upload).
pub fn decode_image_bytes(bytes: &[u8]) -> Result<RasterImage> {
    let upload = || PathBuf::from("<upload>");
    let format = image::guess_format(bytes).map_err(|_| Error::UnsupportedFormat("unrecognised image bytes".into()))?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Pnm) {
        return Err(Error::UnsupportedFormat(format!("{format:?}")));
    }
    let img = image::load_from_memory_with_format(bytes, format).map_err(|e| Error::Decode {
        path: upload(),
        reason: e.to_string(),
    })?;
    from_dynamic(img).map_err(|reason| Error::Decode { path: upload(), reason })
}

fn from_dynamic(img: DynamicImage) -> std::result::Result<RasterImage, String> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let widen = |v: &[u8]| v.iter().map(|&s| u16::from(s)).collect::<Vec<_>>();
    let (channels, depth, samples) = match img {
        DynamicImage::ImageLuma8(b) => (1, BitDepth::Eight, widen(b.as_raw())),
        DynamicImage::ImageLumaA8(b) => (2, BitDepth::Eight, widen(b.as_raw())),
        DynamicImage::ImageRgb8(b) => (3, BitDepth::Eight, widen(b.as_raw())),
        DynamicImage::ImageRgba8(b) => (4, BitDepth::Eight, widen(b.as_raw())),
        DynamicImage::ImageLuma16(b) => (1, BitDepth::Sixteen, b.into_raw()),
        DynamicImage::ImageLumaA16(b) => (2, BitDepth::Sixteen, b.into_raw()),
        DynamicImage::ImageRgb16(b) => (3, BitDepth::Sixteen, b.into_raw()),
        DynamicImage::ImageRgba16(b) => (4, BitDepth::Sixteen, b.into_raw()),
        other => return Err(format!("unsupported pixel layout {:?}", other.color())),
    };
    RasterImage::new(w, h, channels, depth, samples).map_err(|e| e.to_string())
}

/// Writes a PNG with the image's own bit depth; 1–4 channels only.
pub fn save_png(image: &RasterImage, path: &Path) -> Result<()> {
    let color = match image.channels() {
        1 => png::ColorType::Grayscale,
        2 => png::ColorType::GrayscaleAlpha,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        n => return Err(Error::UnsupportedFormat(format!("PNG cannot hold {n} channels"))),
    };
    let data: Vec<u8> = match image.depth() {
        BitDepth::Eight => image.samples().iter().map(|&v| v as u8).collect(),
        BitDepth::Sixteen => image.samples().iter().flat_map(|v| v.to_be_bytes()).collect(),
    };
    let depth = match image.depth() {
        BitDepth::Eight => png::BitDepth::Eight,
        BitDepth::Sixteen => png::BitDepth::Sixteen,
    };
    write_png(path, image.width(), image.height(), color, depth, None, &data)
}

pub(crate) fn write_png(
    path: &Path,
    width: usize,
    height: usize,
    color: png::ColorType,
    depth: png::BitDepth,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    if let Some(p) = palette {
        encoder.set_palette(p);
    }
    let encode_err = |e: png::EncodingError| match e {
        png::EncodingError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(data).map_err(encode_err)?;
    writer.finish().map_err(encode_err)?;
    Ok(())
}

/// Reads a mask PNG as raw label values: palette indices for paletted
/// files, grey values for greyscale, and for colour files the grey value
/// when r = g = b, else 1 for any nonzero pixel.
pub fn read_mask(path: &Path) -> Result<LabelMask> {
    let decode_err = |reason: String| Error::Decode {
        path: path.to_path_buf(),
        reason,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| decode_err(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader.next_frame(&mut buf).map_err(|e| decode_err(e.to_string()))?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let bits = frame.bit_depth as usize;
    let samples_per_pixel = frame.color_type.samples();
    let line = frame.line_size;

    let sample = |row: &[u8], i: usize| -> u16 {
        match bits {
            16 => u16::from_be_bytes([row[2 * i], row[2 * i + 1]]),
            8 => u16::from(row[i]),
            _ => {
                let per_byte = 8 / bits;
                let byte = row[i / per_byte];
                let shift = 8 - bits * (i % per_byte + 1);
                u16::from((byte >> shift) & ((1u8 << bits) - 1))
            }
        }
    };

    let mut labels = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * line..(y + 1) * line];
        for x in 0..w {
            let label = match frame.color_type {
                png::ColorType::Grayscale | png::ColorType::Indexed => sample(row, x),
                png::ColorType::GrayscaleAlpha => sample(row, 2 * x),
                png::ColorType::Rgb | png::ColorType::Rgba => {
                    let base = x * samples_per_pixel;
                    let (r, g, b) = (sample(row, base), sample(row, base + 1), sample(row, base + 2));
                    if r == g && g == b {
                        r
                    } else {
                        1
                    }
                }
            };
            labels.push(label);
        }
    }
    LabelMask::new(w, h, labels)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandsHeader {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub depth: BitDepth,
}

pub fn parse_key_values(text: &str, what: &'static str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            what,
            line: i + 1,
            reason: format!("expected key=value, got {line:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn required<'a>(kv: &'a [(String, String)], key: &str, what: &'static str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::invalid(what, format!("missing key {key:?}")))
}

pub(crate) fn parse_num<T: std::str::FromStr>(v: &str, key: &str, what: &'static str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::invalid(what, format!("{key}={v:?} is not a valid number")))
}

fn bands_raw_path(header: &Path) -> PathBuf {
    header.with_extension("raw")
}

pub fn load_bands(path: &Path) -> Result<RasterImage> {
    const WHAT: &str = "bands header";
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let kv = parse_key_values(&text, WHAT)?;
    let width = parse_num(required(&kv, "width", WHAT)?, "width", WHAT)?;
    let height = parse_num(required(&kv, "height", WHAT)?, "height", WHAT)?;
    let channels = parse_num(required(&kv, "channels", WHAT)?, "channels", WHAT)?;
    let depth = BitDepth::from_bits(parse_num(required(&kv, "bit_depth", WHAT)?, "bit_depth", WHAT)?)?;
    let order = required(&kv, "byte_order", WHAT)?;
    if order != "little" {
        return Err(Error::UnsupportedFormat(format!("byte_order={order} (only little)")));
    }
    let raw_path = bands_raw_path(path);
    let raw = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    let bytes_per = (depth.bits() / 8) as usize;
    let expected = width * height * channels * bytes_per;
    if raw.len() != expected {
        return Err(Error::Decode {
            path: raw_path,
            reason: format!("{} bytes, header implies {expected}", raw.len()),
        });
    }
    let samples = match depth {
        BitDepth::Eight => raw.into_iter().map(u16::from).collect(),
        BitDepth::Sixteen => raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
    };
    RasterImage::new(width, height, channels, depth, samples)
}

/// Writes `path` (the `.bands` header) and its `.raw` sibling.
pub fn save_bands(image: &RasterImage, path: &Path) -> Result<()> {
    let header = format!(
        "width={}\nheight={}\nchannels={}\nbit_depth={}\nbyte_order=little\n",
        image.width(),
        image.height(),
        image.channels(),
        image.depth().bits()
    );
    fs::write(path, header).map_err(|e| Error::io(path, e))?;
    let raw_path = bands_raw_path(path);
    let mut out = BufWriter::new(File::create(&raw_path).map_err(|e| Error::io(&raw_path, e))?);
    let write = |out: &mut BufWriter<File>, bytes: &[u8]| out.write_all(bytes).map_err(|e| Error::io(&raw_path, e));
    for &v in image.samples() {
        match image.depth() {
            BitDepth::Eight => write(&mut out, &[v as u8])?,
            BitDepth::Sixteen => write(&mut out, &v.to_le_bytes())?,
        }
    }
    out.flush().map_err(|e| Error::io(&raw_path, e))
}

/// Width and height without decoding pixel data where the format allows.
pub fn image_dimensions(path: &Path) -> Result<(usize, usize)> {
    if extension(path) == BANDS_EXTENSION {
        const WHAT: &str = "bands header";
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let kv = parse_key_values(&text, WHAT)?;
        return Ok((
            parse_num(required(&kv, "width", WHAT)?, "width", WHAT)?,
            parse_num(required(&kv, "height", WHAT)?, "height", WHAT)?,
        ));
    }
    let (w, h) = image::image_dimensions(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok((w as usize, h as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trips_depth_and_channels() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = RasterImage::from_fn_u8(100, 50, 3, |x, y| vec![x as u8, y as u8, 7]).unwrap();
        let p = dir.path().join("rgb.png");
        save_png(&rgb, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!((back.width(), back.height(), back.channels(), back.depth()), (100, 50, 3, BitDepth::Eight));
        assert_eq!(back, rgb);

        let gray16 = RasterImage::new(3, 2, 1, BitDepth::Sixteen, vec![0, 1, 300, 4095, 65535, 12]).unwrap();
        let p = dir.path().join("g16.png");
        save_png(&gray16, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!((back.channels(), back.depth()), (1, BitDepth::Sixteen));
        assert_eq!(back, gray16);
    }

    #[test]
    fn bands_container_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples: Vec<u16> = (0..4 * 3 * 5).map(|i| (i * 997 % 65536) as u16).collect();
        let img = RasterImage::new(4, 3, 5, BitDepth::Sixteen, samples).unwrap();
        let p = dir.path().join("scene.bands");
        save_bands(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!(back.channels(), 5);
        assert_eq!(back, img);
        assert_eq!(image_dimensions(&p).unwrap(), (4, 3));
    }

    #[test]
    fn bands_size_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bands");
        fs::write(&p, "width=2\nheight=2\nchannels=1\nbit_depth=8\nbyte_order=little\n").unwrap();
        fs::write(p.with_extension("raw"), [0u8; 3]).unwrap();
        assert!(matches!(load_image(&p), Err(Error::Decode { .. })));
    }

    #[test]
    fn unsupported_and_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let jpg = dir.path().join("photo.jpg");
        fs::write(&jpg, b"not really").unwrap();
        assert!(matches!(load_image(&jpg), Err(Error::UnsupportedFormat(_))));
        let png = dir.path().join("broken.png");
        fs::write(&png, b"\x89PNG garbage").unwrap();
        assert!(matches!(load_image(&png), Err(Error::Decode { .. })));
        assert!(matches!(load_image(&dir.path().join("missing.png")), Err(Error::Io { .. })));
    }

    #[test]
    fn ppm_loads_as_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tiny.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.samples(), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(img.channels(), 3);
    }
}
