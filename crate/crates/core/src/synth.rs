//! Deterministic synthetic fixtures: two-tone blobs, half-split images,
//! translating-square sequences and random masks. All generators are
//! seeded with ChaCha8 so outputs are identical across platforms.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{save_png, write_mask, MaskMode};
use crate::raster::{BinaryMask, RasterImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub id: String,
    pub image: RasterImage,
    pub gt: BinaryMask,
}

/// Smooth blob: a union of overlapping discs around the image centre.
pub fn random_blob(rng: &mut impl Rng, width: usize, height: usize, min_diameter: f64) -> BinaryMask {
    let r0 = min_diameter / 2.0;
    let max_r = (width.min(height) as f64 / 4.0).max(r0);
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let count = rng.gen_range(1..=4);
    let discs: Vec<(f64, f64, f64)> = (0..count)
        .map(|i| {
            let r = rng.gen_range(r0..=max_r);
            // The first disc is centred so the blob is one connected piece.
            let (ox, oy) = if i == 0 {
                (0.0, 0.0)
            } else {
                (rng.gen_range(-r0..=r0), rng.gen_range(-r0..=r0))
            };
            (cx + ox, cy + oy, r)
        })
        .collect();
    BinaryMask::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        discs.iter().any(|&(dx, dy, r)| (px - dx).powi(2) + (py - dy).powi(2) <= r * r)
    })
}

/// Independent Bernoulli pixels.
pub fn random_mask(rng: &mut impl Rng, width: usize, height: usize, density: f64) -> BinaryMask {
    BinaryMask::from_fn(width, height, |_, _| rng.gen_bool(density))
}

/// RGB image with one colour inside `gt` and a contrasting colour outside,
/// plus small per-pixel noise.
pub fn paint_two_tone(rng: &mut impl Rng, gt: &BinaryMask, noise: u8) -> RasterImage {
    let fg: [i32; 3] = [rng.gen_range(170..=230), rng.gen_range(150..=230), rng.gen_range(20..=80)];
    let bg: [i32; 3] = [rng.gen_range(20..=70), rng.gen_range(30..=90), rng.gen_range(140..=220)];
    let (w, h) = gt.dims();
    let noise = i32::from(noise);
    let mut samples = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let base = if gt.get(x, y) { fg } else { bg };
            for c in base {
                let n = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
                samples.push((c + n).clamp(0, 255) as u16);
            }
        }
    }
    RasterImage::new(w, h, 3, crate::raster::BitDepth::Eight, samples).expect("valid dimensions")
}

/// The strong-contrast blob suite used for simulated-click checks.
pub fn two_tone_suite(seed: u64, count: usize, size: usize) -> Vec<SynthInstance> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let gt = random_blob(&mut rng, size, size, size as f64 / 4.0);
            let image = paint_two_tone(&mut rng, &gt, 6);
            SynthInstance {
                id: format!("blob_{i:03}"),
                image,
                gt,
            }
        })
        .collect()
}

/// Dark left half, bright right half; the ground truth is the left half.
pub fn two_tone_halves(width: usize, height: usize) -> SynthInstance {
    let gt = BinaryMask::from_fn(width, height, |x, _| x < width / 2);
    let image = RasterImage::from_fn_u8(width, height, 3, |x, _| {
        if x < width / 2 {
            vec![30, 30, 30]
        } else {
            vec![220, 220, 220]
        }
    })
    .expect("valid dimensions");
    SynthInstance {
        id: "halves".into(),
        image,
        gt,
    }
}

/// Writes `images/<id>.png` and `masks/<id>.png` (foreground 255).
pub fn write_dataset(root: &Path, instances: &[SynthInstance]) -> Result<()> {
    let images = root.join("images");
    let masks = root.join("masks");
    for dir in [&images, &masks] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for inst in instances {
        save_png(&inst.image, &images.join(format!("{}.png", inst.id)))?;
        write_mask(&inst.gt.to_label_mask(255), MaskMode::Grayscale, &masks.join(format!("{}.png", inst.id)))?;
    }
    Ok(())
}

/// Sequence of frames with a bright square on a dark textured background,
/// moving `shift` pixels right per frame. Returns the frames and the exact
/// square masks.
pub fn translating_square(
    frames: usize,
    size: usize,
    side: usize,
    shift: usize,
    seed: u64,
) -> (Vec<RasterImage>, Vec<BinaryMask>) {
    let mut rng = rng(seed);
    // Static background texture so descriptors away from the square vary.
    let texture: Vec<u8> = (0..size * size).map(|_| rng.gen_range(10..60)).collect();
    let top = (size - side) / 2;
    let mut images = Vec::with_capacity(frames);
    let mut masks = Vec::with_capacity(frames);
    for f in 0..frames {
        let left = size / 8 + f * shift;
        let inside = |x: usize, y: usize| (left..left + side).contains(&x) && (top..top + side).contains(&y);
        let gt = BinaryMask::from_fn(size, size, inside);
        let image = RasterImage::from_fn_u8(size, size, 3, |x, y| {
            if inside(x, y) {
                vec![230, 200, 40]
            } else {
                let t = texture[y * size + x];
                vec![t, t / 2 + 20, 90]
            }
        })
        .expect("valid dimensions");
        images.push(image);
        masks.push(gt);
    }
    (images, masks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic() {
        let a = two_tone_suite(7, 3, 48);
        let b = two_tone_suite(7, 3, 48);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.gt, y.gt);
            assert!(x.gt.count() > 100);
        }
    }

    #[test]
    fn square_moves() {
        let (frames, masks) = translating_square(3, 64, 16, 4, 1);
        assert_eq!(frames.len(), 3);
        assert_eq!(masks[0].count(), 256);
        assert!(masks[1].get(8 + 4, 24));
        assert!(!masks[1].get(8 + 3, 24));
    }
}
