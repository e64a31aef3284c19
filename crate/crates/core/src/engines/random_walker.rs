//! Random walker on the 4-neighbour pixel graph, solved with
//! Jacobi-preconditioned conjugate gradient.

use super::seeds::Seeds;
use super::{pair_prior, EngineOutput, EngineParams, ScaledImage};
use crate::error::{Error, Result};
use crate::raster::{EdgeMap, RasterImage};

/// Added to every edge weight so the graph stays connected.
pub const WEIGHT_FLOOR: f64 = 1e-6;

pub fn segment_with_seeds(
    params: &EngineParams,
    image: &RasterImage,
    seeds: &Seeds,
    prior: &EdgeMap,
) -> Result<EngineOutput> {
    let solution = potentials(params, image, seeds, prior)?;
    let (w, h) = image.dims();
    Ok(EngineOutput::from_confidence(w, h, solution.potentials))
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Probability of reaching a positive seed first, per pixel.
    pub potentials: Vec<f64>,
    pub iterations: usize,
    /// Final `max |r_i|` divided by the weakest edge weight in the system.
    pub residual: f64,
}

/// The linear system over unseeded pixels, with unknown-to-unknown
/// couplings in compressed rows.
struct System {
    degree: Vec<f64>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    rhs: Vec<f64>,
    min_weight: f64,
}

impl System {
    /// `out = L_u x`; returns `x . out`.
    fn apply(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let mut xax = 0.0;
        for i in 0..self.degree.len() {
            let mut acc = self.degree[i] * x[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                acc -= self.weights[k] * x[self.cols[k] as usize];
            }
            out[i] = acc;
            xax += x[i] * acc;
        }
        xax
    }
}

pub fn potentials(params: &EngineParams, image: &RasterImage, seeds: &Seeds, prior: &EdgeMap) -> Result<Solution> {
    let (w, h) = image.dims();
    let n = w * h;
    let scaled = ScaledImage::new(image);
    let weight = |p: usize, q: usize| {
        let attenuation = 1.0 - params.edge_prior_weight * pair_prior(prior, p, q);
        (-params.beta * scaled.dist2(p, q)).exp() * attenuation + WEIGHT_FLOOR
    };

    let pos = seeds.positive.data();
    let neg = seeds.negative.data();
    let fixed = |p: usize| -> Option<f64> {
        if pos[p] {
            Some(1.0)
        } else if neg[p] {
            Some(0.0)
        } else {
            None
        }
    };

    let mut index = vec![u32::MAX; n];
    let mut unknowns = Vec::new();
    for p in 0..n {
        if fixed(p).is_none() {
            index[p] = unknowns.len() as u32;
            unknowns.push(p);
        }
    }

    let m = unknowns.len();
    let mut system = System {
        degree: vec![0.0; m],
        row_start: Vec::with_capacity(m + 1),
        cols: Vec::with_capacity(4 * m),
        weights: Vec::with_capacity(4 * m),
        rhs: vec![0.0; m],
        min_weight: f64::INFINITY,
    };
    system.row_start.push(0);
    for (i, &p) in unknowns.iter().enumerate() {
        let (x, y) = (p % w, p / w);
        let neighbours = [
            (x > 0).then(|| p - 1),
            (x + 1 < w).then(|| p + 1),
            (y > 0).then(|| p - w),
            (y + 1 < h).then(|| p + w),
        ];
        for q in neighbours.into_iter().flatten() {
            let wq = weight(p, q);
            system.degree[i] += wq;
            system.min_weight = system.min_weight.min(wq);
            match fixed(q) {
                Some(v) => system.rhs[i] += wq * v,
                None => {
                    system.cols.push(index[q]);
                    system.weights.push(wq);
                }
            }
        }
        system.row_start.push(system.cols.len());
    }

    let (x, iterations, residual) =
        conjugate_gradient(&system, params.solver_tolerance, params.solver_max_iterations)?;

    let mut potentials = vec![0.0; n];
    for p in 0..n {
        potentials[p] = match fixed(p) {
            Some(v) => v,
            None => x[index[p] as usize].clamp(0.0, 1.0),
        };
    }
    Ok(Solution {
        potentials,
        iterations,
        residual,
    })
}

/// Jacobi-preconditioned conjugate gradient on `system`.
///
/// Stops once every residual entry is at most `tolerance` times the weakest
/// edge weight. A cluster of pixels whose only links to the rest of the
/// graph are floor-weight edges has its error damped by that weight in the
/// residual, so a norm relative to `|b|` can look converged while the
/// cluster's potentials are still far off.
fn conjugate_gradient(system: &System, tolerance: f64, max_iterations: usize) -> Result<(Vec<f64>, usize, f64)> {
    let m = system.rhs.len();
    let mut x = vec![0.0; m];
    let scale = system.min_weight;
    let residual_of = |r: &[f64]| r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())) / scale;

    let mut r = system.rhs.clone();
    let mut residual = if m == 0 { 0.0 } else { residual_of(&r) };
    if residual <= tolerance {
        return Ok((x, 0, residual));
    }
    let inv_diag: Vec<f64> = system.degree.iter().map(|d| 1.0 / d).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iterations {
        let alpha = rz / system.apply(&p, &mut ap);
        let mut r_max = 0.0f64;
        let mut rz_next = 0.0;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            r_max = r_max.max(r[i].abs());
            z[i] = r[i] * inv_diag[i];
            rz_next += r[i] * z[i];
        }
        residual = r_max / scale;
        if residual <= tolerance {
            return Ok((x, it, residual));
        }
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverNonConvergence {
        iterations: max_iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::{ClickSet, Polarity};
    use crate::engines::{rasterize_clicks, EngineKind};
    use crate::raster::BinaryMask;

    fn path_seeds(len: usize) -> Seeds {
        let clicks: ClickSet = [(0, 0, Polarity::Positive), (len as u32 - 1, 0, Polarity::Negative)]
            .into_iter()
            .collect();
        rasterize_clicks(&clicks, len, 1, 0)
    }

    fn uniform(len: usize) -> RasterImage {
        RasterImage::from_fn_u8(len, 1, 1, |_, _| vec![100]).unwrap()
    }

    #[test]
    fn three_pixel_path_midpoint_is_half() {
        let params = EngineParams::new(EngineKind::RandomWalker);
        let s = potentials(&params, &uniform(3), &path_seeds(3), &EdgeMap::zeros(3, 1)).unwrap();
        assert!((s.potentials[1] - 0.5).abs() < 1e-9);
        let out = segment_with_seeds(&params, &uniform(3), &path_seeds(3), &EdgeMap::zeros(3, 1)).unwrap();
        assert!(out.mask.get(1, 0));
    }

    #[test]
    fn five_pixel_path_is_linear() {
        // Uniform weights: interior rows of L are [-1, 2, -1], so the
        // 3x3 system solves to (0.75, 0.5, 0.25).
        let params = EngineParams::new(EngineKind::RandomWalker);
        let s = potentials(&params, &uniform(5), &path_seeds(5), &EdgeMap::zeros(5, 1)).unwrap();
        for (got, want) in s.potentials.iter().zip([1.0, 0.75, 0.5, 0.25, 0.0]) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn reports_nonconvergence() {
        let img = RasterImage::from_fn_u8(32, 32, 1, |x, y| vec![((x * 37 + y * 11) % 256) as u8]).unwrap();
        let clicks: ClickSet = [(3, 3, Polarity::Positive), (28, 28, Polarity::Negative)]
            .into_iter()
            .collect();
        let params = EngineParams {
            solver_max_iterations: 2,
            ..EngineParams::new(EngineKind::RandomWalker)
        };
        let seeds = rasterize_clicks(&clicks, 32, 32, 1);
        let err = potentials(&params, &img, &seeds, &EdgeMap::zeros(32, 32)).unwrap_err();
        assert!(matches!(err, Error::SolverNonConvergence { iterations: 2, .. }));
    }

    #[test]
    fn positive_only_is_all_foreground() {
        let img = uniform(6);
        let clicks: ClickSet = [(2, 0, Polarity::Positive)].into_iter().collect();
        let seeds = rasterize_clicks(&clicks, 6, 1, 0);
        let params = EngineParams::new(EngineKind::RandomWalker);
        let out = segment_with_seeds(&params, &img, &seeds, &EdgeMap::zeros(6, 1)).unwrap();
        assert_eq!(out.mask, BinaryMask::full(6, 1));
    }
}
