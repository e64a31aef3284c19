//! Pixel containers shared by every module: multi-channel images, label
//! masks, binary masks and edge maps. All are row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            8 => Ok(BitDepth::Eight),
            16 => Ok(BitDepth::Sixteen),
            other => Err(Error::invalid("bit depth", format!("{other} (expected 8 or 16)"))),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

/// Multi-channel 8 or 16-bit image with channel-interleaved samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    depth: BitDepth,
    samples: Vec<u16>,
}

impl RasterImage {
    pub const MAX_CHANNELS: usize = 16;

    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        depth: BitDepth,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image", "width and height must be at least 1"));
        }
        if channels == 0 || channels > Self::MAX_CHANNELS {
            return Err(Error::invalid(
                "image",
                format!("{channels} channels (expected 1..={})", Self::MAX_CHANNELS),
            ));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(Error::invalid(
                "image",
                format!("{} samples for {width}x{height}x{channels}", samples.len()),
            ));
        }
        let max = depth.max_value();
        if let Some(v) = samples.iter().find(|&&v| v > max) {
            return Err(Error::invalid(
                "image",
                format!("sample {v} exceeds {}-bit range", depth.bits()),
            ));
        }
        Ok(RasterImage {
            width,
            height,
            channels,
            depth,
            samples,
        })
    }

    /// Builds an 8-bit image by evaluating `f(x, y)` for each pixel.
    pub fn from_fn_u8(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize) -> Vec<u8>,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                if px.len() != channels {
                    return Err(Error::invalid("image", "pixel closure returned wrong channel count"));
                }
                samples.extend(px.into_iter().map(u16::from));
            }
        }
        RasterImage::new(width, height, channels, BitDepth::Eight, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u16> {
        self.samples
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u16] {
        let start = (y * self.width + x) * self.channels;
        &self.samples[start..start + self.channels]
    }

    pub fn sample(&self, x: usize, y: usize, c: usize) -> u16 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    /// Samples scaled to [0, 1] by the bit-depth maximum, one `Vec` per
    /// image, still channel-interleaved.
    pub fn normalized(&self) -> Vec<f64> {
        let scale = 1.0 / f64::from(self.depth.max_value());
        self.samples.iter().map(|&v| f64::from(v) * scale).collect()
    }

    /// Copies out the rectangle `[x0, x0 + w) x [y0, y0 + h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(Error::invalid(
                "crop",
                format!("{w}x{h}+{x0}+{y0} outside {}x{}", self.width, self.height),
            ));
        }
        let mut samples = Vec::with_capacity(w * h * self.channels);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * self.channels;
            samples.extend_from_slice(&self.samples[start..start + w * self.channels]);
        }
        Ok(RasterImage {
            width: w,
            height: h,
            channels: self.channels,
            depth: self.depth,
            samples,
        })
    }
}

/// Per-pixel label ids; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u16>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::invalid(
                "label mask",
                format!("{} labels for {width}x{height}", labels.len()),
            ));
        }
        Ok(LabelMask {
            width,
            height,
            labels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        LabelMask {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: u16) {
        self.labels[y * self.width + x] = label;
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Pixels carrying exactly `label`.
    pub fn select(&self, label: u16) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.labels.iter().map(|&l| l == label).collect(),
        }
    }

    /// Every nonzero label becomes foreground.
    pub fn foreground(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.labels.iter().map(|&l| l != 0).collect(),
        }
    }
}

/// Foreground/background mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(
                "binary mask",
                format!("{} pixels for {width}x{height}", data.len()),
            ));
        }
        Ok(BinaryMask {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    /// Like `get`, but anything outside the image reads as background.
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&v| v)
    }

    pub fn to_label_mask(&self, label: u16) -> LabelMask {
        LabelMask {
            width: self.width,
            height: self.height,
            labels: self.data.iter().map(|&v| if v { label } else { 0 }).collect(),
        }
    }

    /// Pixels set in `self` but not in `other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && !b)
                .collect(),
        })
    }
}

/// Boundary prior in [0, 1], fed back between interaction rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl EdgeMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::invalid(
                "edge map",
                format!("{} values for {width}x{height}", values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("edge map", format!("value {v} outside [0, 1]")));
        }
        Ok(EdgeMap {
            width,
            height,
            values,
        })
    }

    /// The initial all-zero prior.
    pub fn zeros(width: usize, height: usize) -> Self {
        EdgeMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_rejects_bad_shapes() {
        assert!(RasterImage::new(0, 4, 1, BitDepth::Eight, vec![]).is_err());
        assert!(RasterImage::new(2, 2, 17, BitDepth::Eight, vec![0; 68]).is_err());
        assert!(RasterImage::new(2, 2, 1, BitDepth::Eight, vec![0; 3]).is_err());
        assert!(RasterImage::new(2, 2, 1, BitDepth::Eight, vec![0, 0, 0, 256]).is_err());
        assert!(RasterImage::new(2, 2, 1, BitDepth::Sixteen, vec![0, 0, 0, 256]).is_ok());
    }

    #[test]
    fn crop_copies_the_rectangle() {
        let img = RasterImage::from_fn_u8(4, 3, 1, |x, y| vec![(y * 4 + x) as u8]).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.samples(), &[5, 6, 9, 10]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }

    #[test]
    fn edge_map_range_is_enforced() {
        assert!(EdgeMap::new(1, 1, vec![1.5]).is_err());
        assert!(EdgeMap::zeros(3, 2).is_zero());
    }

    #[test]
    fn label_mask_selection() {
        let m = LabelMask::new(3, 1, vec![0, 2, 1]).unwrap();
        assert_eq!(m.select(2).data(), &[false, true, false]);
        assert_eq!(m.foreground().count(), 2);
        assert_eq!(m.max_label(), 2);
    }
}
