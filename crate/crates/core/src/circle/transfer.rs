//! Ulam discretization of the transfer operator of an expanding circle map and
//! its fixed density.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dynamics::CircleMap;
use crate::error::{Error, Result};
use crate::numerics::solve_increasing;

pub const DEFAULT_BINS: usize = 4096;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 42;

/// Row-stochastic `N x N` matrix; entry `(i, j)` is the fraction of bin `i`
/// mapped into bin `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamMatrix {
    bins: usize,
    rows: Vec<Vec<(usize, f64)>>,
    /// Transpose, used for the density update.
    columns: Vec<Vec<(usize, f64)>>,
}

impl UlamMatrix {
    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `w -> w P`: pushes a density (bin values) forward by the map.
    pub fn push_forward(&self, w: &[f64]) -> Vec<f64> {
        self.columns
            .par_iter()
            .map(|col| col.iter().map(|&(i, p)| w[i] * p).sum())
            .collect()
    }
}

/// Exact Ulam matrix built from the monotone lift: every bin is cut at the
/// preimages of the bin boundaries it covers.
pub fn ulam_matrix<M: CircleMap + ?Sized>(map: &M, bins: usize) -> Result<UlamMatrix> {
    if bins < map.degree() as usize {
        return Err(Error::InvalidArgument(format!(
            "need at least {} bins, got {bins}",
            map.degree()
        )));
    }
    let nf = bins as f64;
    let rows: Vec<Vec<(usize, f64)>> = (0..bins)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 / nf;
            let b = (i + 1) as f64 / nf;
            let fa = map.lift(a);
            let fb = map.lift(b);
            let first = (fa * nf).floor() as i64;
            let last = (fb * nf).ceil() as i64;
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity((last - first) as usize);
            let mut left = a;
            for k in first..last {
                let right = if k + 1 >= last {
                    b
                } else {
                    let t = (k + 1) as f64 / nf;
                    solve_increasing(|x| map.lift(x) - t, |x| map.derivative(x, 1), left, b)
                };
                let col = k.rem_euclid(bins as i64) as usize;
                let w = (right - left) * nf;
                match entries.iter_mut().find(|e| e.0 == col) {
                    Some(e) => e.1 += w,
                    None => entries.push((col, w)),
                }
                left = right;
            }
            entries.sort_by_key(|e| e.0);
            entries
        })
        .collect();

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); bins];
    for (i, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            columns[j].push((i, p));
        }
    }
    Ok(UlamMatrix { bins, rows, columns })
}

/// Piecewise-constant density on a uniform partition of the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityApprox {
    /// Density values (per unit length); `sum / N = 1`.
    pub weights: Vec<f64>,
    /// `|| P w - w ||_1` at return.
    pub residual: f64,
    pub iterations: usize,
    /// L1 distance to the density obtained from a random restart.
    pub uniqueness_gap: f64,
}

impl DensityApprox {
    /// Wraps given bin values, normalizing them to unit mass.
    pub fn from_weights(mut weights: Vec<f64>) -> Self {
        let n = weights.len() as f64;
        let mass: f64 = weights.iter().sum::<f64>() / n;
        weights.iter_mut().for_each(|w| *w /= mass);
        Self { weights, residual: 0.0, iterations: 0, uniqueness_gap: 0.0 }
    }

    pub fn uniform(bins: usize) -> Self {
        Self::from_weights(vec![1.0; bins])
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.bins() as f64
    }

    /// Linear interpolation between bin midpoints, periodic in `x`.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.bins();
        let s = x.rem_euclid(1.0) * n as f64 - 0.5;
        let base = s.floor();
        let t = s - base;
        let i0 = (base as i64).rem_euclid(n as i64) as usize;
        let i1 = (i0 + 1) % n;
        (1.0 - t) * self.weights[i0] + t * self.weights[i1]
    }

    /// `mu([a, b])` for `a <= b` lift values, `b - a <= 1`.
    pub fn measure(&self, a: f64, b: f64) -> f64 {
        self.cumulative(b) - self.cumulative(a)
    }

    /// `mu([0, x])` extended to a lift of degree one.
    fn cumulative(&self, x: f64) -> f64 {
        let n = self.bins();
        let whole = x.floor();
        let s = (x - whole) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let full: f64 = self.weights[..k].iter().sum::<f64>() / n as f64;
        whole + full + (s - k as f64) * self.weights[k] / n as f64
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.weights.iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.bins() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.weights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| (lo.min(w), hi.max(w)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOptions {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Admissible L1 gap between the two power-iteration starts.
    pub uniqueness_tol: f64,
    pub seed: u64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            uniqueness_tol: 1e-8,
            seed: DEFAULT_SEED,
        }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn normalize(w: &mut [f64]) {
    let mass = w.iter().sum::<f64>() / w.len() as f64;
    w.iter_mut().for_each(|x| *x /= mass);
}

/// Power iteration until `|| P w - w ||_1 <= tol`; returns `(w, residual, iterations)`.
fn power_iterate(matrix: &UlamMatrix, mut w: Vec<f64>, max_iters: usize, tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    normalize(&mut w);
    let mut residual = f64::INFINITY;
    for it in 0..=max_iters {
        let mut next = matrix.push_forward(&w);
        normalize(&mut next);
        residual = l1(&next, &w);
        w = next;
        if residual <= tol {
            return Ok((w, residual, it + 1));
        }
    }
    Err(Error::NoConvergence { what: "invariant density", iterations: max_iters, residual })
}

/// Fixed density of the Ulam matrix, started from the uniform density and
/// cross-checked against a random positive start.
pub fn invariant_density(matrix: &UlamMatrix, options: DensityOptions) -> Result<DensityApprox> {
    let n = matrix.bins();
    // converge both runs well below the uniqueness tolerance so their gap measures non-uniqueness
    let tight = options.residual_tol.min(options.uniqueness_tol) * 1e-2;
    let (w, residual, iterations) = power_iterate(matrix, vec![1.0; n], options.max_iters, options.residual_tol)?;
    let (w_tight, _, _) = power_iterate(matrix, w.clone(), options.max_iters, tight)?;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let (other, _, _) = power_iterate(matrix, start, options.max_iters, tight)?;
    let gap = l1(&w_tight, &other);
    if gap > options.uniqueness_tol {
        return Err(Error::NonUniqueDensity { l1_gap: gap });
    }
    Ok(DensityApprox { weights: w, residual, iterations, uniqueness_gap: gap })
}

/// `lambda_mu = int log F' d mu`, by the midpoint rule on the bins.
pub fn acim_exponent<M: CircleMap + ?Sized>(map: &M, density: &DensityApprox) -> f64 {
    let n = density.bins();
    (0..n)
        .map(|i| density.weights[i] * map.derivative(density.midpoint(i), 1).ln())
        .sum::<f64>()
        / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::dynamics::{CircleLift, TrigTerm};
    use std::f64::consts::PI;

    fn negative_map() -> CircleLift {
        CircleLift::new(2, vec![TrigTerm::new(1, 0.5 / (2.0 * PI), 0.0)]).unwrap()
    }

    #[test]
    fn doubling_map_ulam_rows() {
        let m = ulam_matrix(&CircleLift::linear(2), 4).unwrap();
        for i in 0..4 {
            let row = m.row(i);
            assert_eq!(row.len(), 2);
            for &(_, p) in row {
                assert!((p - 0.5).abs() < 1e-15);
            }
        }
        let m = ulam_matrix(&CircleLift::linear(3), 9).unwrap();
        for i in 0..9 {
            assert_eq!(m.row(i).len(), 3);
            assert!(m.row(i).iter().all(|&(_, p)| (p - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn too_few_bins() {
        assert!(ulam_matrix(&CircleLift::linear(3), 2).is_err());
    }

    #[test]
    fn rows_are_stochastic() {
        let m = ulam_matrix(&negative_map(), 1024).unwrap();
        for i in 0..1024 {
            let s: f64 = m.row(i).iter().map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_density_is_uniform() {
        let f = CircleLift::linear(2);
        let m = ulam_matrix(&f, 1024).unwrap();
        let rho = invariant_density(&m, DensityOptions { max_iters: 100, ..Default::default() }).unwrap();
        assert!(rho.weights.iter().all(|w| (w - 1.0).abs() < 1e-12));
        assert!((acim_exponent(&f, &rho) - 2f64.ln()).abs() < 1e-12);
        let e5 = CircleLift::linear(5);
        assert!((acim_exponent(&e5, &DensityApprox::uniform(64)) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_density_converges() {
        let f = negative_map();
        let m = ulam_matrix(&f, 4096).unwrap();
        let rho = invariant_density(&m, DensityOptions { max_iters: 500, ..Default::default() }).unwrap();
        assert!(rho.residual <= 1e-8);
        let (lo, hi) = rho.min_max();
        assert!(lo > 0.0);
        assert!(hi / lo > 1.05);
        assert!((rho.weights.iter().sum::<f64>() / 4096.0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn iteration_budget_is_reported() {
        let m = ulam_matrix(&negative_map(), 256).unwrap();
        let err = invariant_density(&m, DensityOptions { max_iters: 2, ..Default::default() }).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn pushforward_invariance_on_dyadic_intervals() {
        let f = negative_map();
        let n = 2048;
        let rho = invariant_density(&ulam_matrix(&f, n).unwrap(), DensityOptions::default()).unwrap();
        for (a, b) in [(0.0, 0.25), (0.25, 0.5), (0.125, 0.875), (0.5, 1.0)] {
            // f^{-1}[a, b] is a union of one interval per inverse branch
            let pre: f64 = (0..2)
                .map(|m| {
                    let lo = f.branch_inverse(a + m as f64);
                    let hi = f.branch_inverse(b + m as f64);
                    rho.measure(lo, hi)
                })
                .sum();
            assert!((pre - rho.measure(a, b)).abs() <= 3.0 / n as f64);
        }
    }

    #[test]
    fn interpolation_is_periodic() {
        let d = DensityApprox::from_weights(vec![1.0, 2.0, 3.0, 2.0]);
        assert!((d.interpolate(0.125) - d.weights[0]).abs() < 1e-15);
        assert!((d.interpolate(1.125) - d.interpolate(0.125)).abs() < 1e-15);
        assert!((d.interpolate(0.0) - 0.5 * (d.weights[0] + d.weights[3])).abs() < 1e-15);
        assert!((d.measure(0.0, 1.0) - 1.0).abs() < 1e-15);
    }
}
