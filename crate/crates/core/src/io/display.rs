//! Display transforms: medical window level/width and band selection for
//! multi-band rasters. Both produce 8-bit images.

use crate::error::{Error, Result};
use crate::raster::{BitDepth, RasterImage};

/// Maps one intensity through a level/width window, rounding half up.
pub fn window_value(v: f64, level: f64, width: f64) -> u8 {
    let scaled = (v - (level - width / 2.0)) / width * 255.0;
    (scaled + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Window a single-channel image (normally 16-bit) to 8-bit greyscale.
pub fn apply_window(image: &RasterImage, level: f64, width: f64) -> Result<RasterImage> {
    if !(width > 0.0) || !width.is_finite() || !level.is_finite() {
        return Err(Error::invalid("window", format!("level {level}, width {width}: width must be positive")));
    }
    if image.channels() != 1 {
        return Err(Error::invalid(
            "window",
            format!("expects a single-channel image, got {} channels", image.channels()),
        ));
    }
    let samples = image
        .samples()
        .iter()
        .map(|&v| u16::from(window_value(f64::from(v), level, width)))
        .collect();
    RasterImage::new(image.width(), image.height(), 1, BitDepth::Eight, samples)
}

/// Picks three bands as RGB. 8-bit bands pass through; 16-bit bands are
/// stretched by their own min–max (a constant band maps to 0).
pub fn select_bands(image: &RasterImage, bands: [usize; 3]) -> Result<RasterImage> {
    let c = image.channels();
    if let Some(&bad) = bands.iter().find(|&&b| b >= c) {
        return Err(Error::invalid("band selection", format!("band {bad} out of range for {c} channels")));
    }
    let n = image.width() * image.height();
    let samples = image.samples();
    let band = |b: usize| (0..n).map(move |i| samples[i * c + b]);
    let mut out = vec![0u16; n * 3];
    for (slot, &b) in bands.iter().enumerate() {
        match image.depth() {
            BitDepth::Eight => {
                for (i, v) in band(b).enumerate() {
                    out[i * 3 + slot] = v;
                }
            }
            BitDepth::Sixteen => {
                let lo = band(b).min().unwrap_or(0);
                let hi = band(b).max().unwrap_or(0);
                let span = f64::from(hi - lo);
                for (i, v) in band(b).enumerate() {
                    out[i * 3 + slot] = if hi == lo {
                        0
                    } else {
                        (f64::from(v - lo) / span * 255.0 + 0.5).floor() as u16
                    };
                }
            }
        }
    }
    RasterImage::new(image.width(), image.height(), 3, BitDepth::Eight, out)
}
