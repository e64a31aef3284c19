//! Exact Euclidean distance transform (Felzenszwalb–Huttenlocher lower
//! envelope of parabolas, one pass per axis).
//!
//! Pixels outside the image count as background, so a foreground pixel on
//! the border is at distance 1.

use crate::raster::BinaryMask;

/// Distance from every pixel to the nearest background pixel, row-major.
/// Background pixels are 0.
pub fn distance_transform(mask: &BinaryMask) -> Vec<f64> {
    squared_distance_transform(mask)
        .into_iter()
        .map(|d| (d as f64).sqrt())
        .collect()
}

/// Squared distances as exact integers.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<u64> {
    let (w, h) = mask.dims();
    // Pad by one background pixel on every side.
    let (pw, ph) = (w + 2, h + 2);
    let mut grid: Vec<Option<u64>> = vec![Some(0); pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                grid[(y + 1) * pw + x + 1] = None;
            }
        }
    }

    let mut line = Vec::with_capacity(pw.max(ph));
    let mut out = Vec::with_capacity(pw.max(ph));
    let mut env = Envelope::default();
    for x in 0..pw {
        line.clear();
        line.extend((0..ph).map(|y| grid[y * pw + x]));
        env.transform(&line, &mut out);
        for y in 0..ph {
            grid[y * pw + x] = out[y];
        }
    }
    for y in 0..ph {
        line.clear();
        line.extend_from_slice(&grid[y * pw..(y + 1) * pw]);
        env.transform(&line, &mut out);
        grid[y * pw..(y + 1) * pw].copy_from_slice(&out);
    }

    let mut result = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            result.push(grid[(y + 1) * pw + x + 1].expect("padded border reaches every pixel"));
        }
    }
    result
}

/// Index of the largest value, ties going to the lowest index (smallest
/// `(y, x)` for row-major data). `None` when no entry passes `keep`.
pub fn argmax_where(values: &[f64], keep: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if !keep(i) {
            continue;
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Default)]
struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    /// One-dimensional squared-distance transform. `None` marks sites that
    /// do not seed a parabola.
    fn transform(&mut self, f: &[Option<u64>], out: &mut Vec<Option<u64>>) {
        out.clear();
        self.sites.clear();
        self.bounds.clear();
        for (q, fq) in f.iter().enumerate() {
            let Some(fq) = *fq else { continue };
            let height_q = fq as f64 + (q * q) as f64;
            loop {
                let Some(&v) = self.sites.last() else { break };
                let fv = f[v].unwrap() as f64 + (v * v) as f64;
                let s = (height_q - fv) / (2.0 * (q - v) as f64);
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
            if self.sites.is_empty() {
                self.sites.push(q);
                self.bounds.push(f64::NEG_INFINITY);
            }
        }
        if self.sites.is_empty() {
            out.resize(f.len(), None);
            return;
        }
        let mut k = 0;
        for q in 0..f.len() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let v = self.sites[k];
            let d = q.abs_diff(v) as u64;
            out.push(Some(d * d + f[v].unwrap()));
        }
    }
}
