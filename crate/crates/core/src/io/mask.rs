//! Mask files: label ids as 8-bit greyscale PNG, or as a paletted PNG
//! coloured with the VOC palette.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::image::write_png;
use crate::error::{Error, Result};
use crate::raster::LabelMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    Grayscale,
    Pseudocolor,
}

/// PASCAL VOC colour map: the bits of each label are dealt into R, G and B
/// from the most significant bit down.
pub fn voc_palette(n: usize) -> Result<Vec<[u8; 3]>> {
    if n > 256 {
        return Err(Error::invalid("palette size", format!("{n} exceeds 256")));
    }
    Ok((0..n)
        .map(|i| {
            let mut rgb = [0u8; 3];
            let mut label = i;
            let mut shift = 7;
            while label > 0 {
                for (c, slot) in rgb.iter_mut().enumerate() {
                    *slot |= (((label >> c) & 1) as u8) << shift;
                }
                label >>= 3;
                shift -= 1;
            }
            rgb
        })
        .collect())
}

pub fn write_mask(mask: &LabelMask, mode: MaskMode, path: &Path) -> Result<()> {
    let max = mask.max_label();
    if max > 255 {
        return Err(Error::invalid("mask", format!("label {max} does not fit in 8 bits")));
    }
    let data: Vec<u8> = mask.labels().iter().map(|&l| l as u8).collect();
    let (w, h) = mask.dims();
    match mode {
        MaskMode::Grayscale => write_png(path, w, h, png::ColorType::Grayscale, png::BitDepth::Eight, None, &data),
        MaskMode::Pseudocolor => {
            let palette = voc_palette(256)?.concat();
            write_png(path, w, h, png::ColorType::Indexed, png::BitDepth::Eight, Some(palette), &data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{load_image, read_mask};
    use proptest::prelude::*;

    #[test]
    fn palette_head() {
        let p = voc_palette(6).unwrap();
        assert_eq!(p[0], [0, 0, 0]);
        assert_eq!(p[1], [128, 0, 0]);
        assert_eq!(p[2], [0, 128, 0]);
        assert_eq!(p[3], [128, 128, 0]);
        assert_eq!(p[4], [0, 0, 128]);
        assert_eq!(p[5], [128, 0, 128]);
        assert!(voc_palette(257).is_err());
    }

    #[test]
    fn palette_is_distinct() {
        let p = voc_palette(256).unwrap();
        let unique: std::collections::HashSet<_> = p.iter().collect();
        assert_eq!(unique.len(), 256);
    }

    #[test]
    fn pseudocolor_decodes_to_palette_colours() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let mask = LabelMask::new(3, 1, vec![0, 1, 2]).unwrap();
        write_mask(&mask, MaskMode::Pseudocolor, &path).unwrap();
        let rgb = load_image(&path).unwrap();
        assert_eq!(rgb.samples(), &[0, 0, 0, 128, 0, 0, 0, 128, 0]);
        assert_eq!(read_mask(&path).unwrap(), mask);
    }

    #[test]
    fn overflow_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mask = LabelMask::new(1, 1, vec![300]).unwrap();
        assert!(write_mask(&mask, MaskMode::Grayscale, &dir.path().join("x.png")).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>(), pseudo in any::<bool>()) {
            let labels = (0..w * h).map(|i| ((seed.wrapping_mul(i as u64 + 1) >> 7) % 256) as u16).collect();
            let mask = LabelMask::new(w, h, labels).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.png");
            let mode = if pseudo { MaskMode::Pseudocolor } else { MaskMode::Grayscale };
            write_mask(&mask, mode, &path).unwrap();
            prop_assert_eq!(read_mask(&path).unwrap(), mask);
        }
    }
}
