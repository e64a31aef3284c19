//! Shared fixtures for the benchmarks.

use clickmask::simclick::first_click;
use clickmask::synth::{paint_two_tone, random_blob, rng};
use clickmask::{BinaryMask, ClickSet, Polarity, RasterImage};

/// Noisy two-tone RGB image of a random blob, with a positive click at
/// the blob's interior-most pixel and a negative click in a background
/// corner.
pub fn blob_scene(size: usize, seed: u64) -> (RasterImage, BinaryMask, ClickSet) {
    let mut r = rng(seed);
    let gt = random_blob(&mut r, size, size, size as f64 / 4.0);
    let image = paint_two_tone(&mut r, &gt, 12);
    let first = first_click(&gt).expect("blob is never empty");
    let mut clicks = ClickSet::new();
    clicks.push(first.x, first.y, Polarity::Positive);
    let corner = if gt.get(0, 0) { size - 1 } else { 0 };
    clicks.push(corner as u32, corner as u32, Polarity::Negative);
    (image, gt, clicks)
}
