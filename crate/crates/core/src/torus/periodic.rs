//! Periodic orbits of toral automorphisms and their continuation to
//! perturbed maps.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dynamics::{IntAutomorphism, TorusMap};
use super::lattice;
use crate::error::{Error, Result};
use crate::numerics::torus_distance;

/// Largest `|det(A^n - I)|` enumerated.
pub const PERIOD_BUDGET: u128 = 20_000;
/// Seeds converging to points closer than this are the same orbit.
pub const DUPLICATE_TOL: f64 = 1e-8;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 50;

/// Solution of `A^n x = x + k` with `x` in `[0, 1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub point: Vec<f64>,
    /// Exact numerators of `x`, over `denominator`.
    pub numerators: Vec<i128>,
    pub denominator: i128,
    pub k: Vec<i128>,
}

/// `|det(A^n - I)|`, the number of points of period `n`.
pub fn linear_periodic_count(a: &IntAutomorphism, n: u32) -> i128 {
    lattice::det(&shifted_power(a, n)).abs()
}

fn shifted_power(a: &IntAutomorphism, n: u32) -> lattice::IntMatrix {
    let mut m = lattice::pow(&a.matrix, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= 1;
    }
    m
}

/// All fixed points of `A^n` on the torus, ordered by their lattice index in
/// the Hermite box of `A^n - I`.
pub fn linear_periodic_points(a: &IntAutomorphism, n: u32) -> Result<Vec<LatticePoint>> {
    linear_periodic_points_with_budget(a, n, PERIOD_BUDGET)
}

pub fn linear_periodic_points_with_budget(a: &IntAutomorphism, n: u32, budget: u128) -> Result<Vec<LatticePoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let m = shifted_power(a, n);
    let det = lattice::det(&m);
    let count = det.unsigned_abs();
    if count > budget {
        return Err(Error::BudgetExceeded { requested: count, budget });
    }
    let d = a.dim();
    let adj = lattice::adjugate(&m);
    let h = lattice::hermite_lower(&m);
    let sign = det.signum();
    let denom = det.abs();
    let mut out = Vec::with_capacity(count as usize);
    let mut k = vec![0i128; d];
    loop {
        let num = lattice::mul_vec(&adj, &k);
        let mut numerators = Vec::with_capacity(d);
        let mut shift = Vec::with_capacity(d);
        for v in num {
            let s = sign * v;
            numerators.push(s.rem_euclid(denom));
            shift.push(s.div_euclid(denom));
        }
        let ms = lattice::mul_vec(&m, &shift);
        let k_reduced: Vec<i128> = k.iter().zip(&ms).map(|(a, b)| a - b).collect();
        out.push(LatticePoint {
            point: numerators.iter().map(|v| *v as f64 / denom as f64).collect(),
            numerators,
            denominator: denom,
            k: k_reduced,
        });
        // odometer over 0 <= k_i < H_ii, last coordinate fastest
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            k[i] += 1;
            if k[i] < h[i][i] {
                break;
            }
            k[i] = 0;
        }
    }
}

/// A periodic orbit of a perturbed map with its return derivative data.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralPeriodicOrbit {
    pub point: Vec<f64>,
    pub period: u32,
    /// The lattice point the continuation started from.
    pub seed: Vec<f64>,
    pub monodromy: DMatrix<f64>,
    /// `(1/n) log |mu_i|` of the monodromy eigenvalues, ascending.
    pub exponents: Vec<f64>,
    /// `(1/n) log |det Df^n(p)|`.
    pub jac_log: f64,
}

/// Lift of `f^n` at `x` with the integer part carried separately, the
/// monodromy, its inverse and the summed log-determinant.
struct Return {
    image: Vec<f64>,
    monodromy: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_det: f64,
}

fn return_map<M: TorusMap + ?Sized>(map: &M, x: &[f64], n: u32) -> Result<Return> {
    let d = map.dim();
    let mut y = x.to_vec();
    let mut whole = vec![0.0; d];
    let mut monodromy = DMatrix::identity(d, d);
    let mut inverse = DMatrix::identity(d, d);
    let mut log_det = 0.0;
    for _ in 0..n {
        let jac = map.jacobian(&y);
        log_det += jac.determinant().abs().ln();
        let jinv = jac.clone().try_inverse().ok_or_else(|| Error::InversionFailure { point: y.clone() })?;
        monodromy = jac * monodromy;
        inverse *= jinv;
        let lifted = map.lift(&y);
        let shift: Vec<f64> = lifted.iter().map(|v| v.floor()).collect();
        whole = map.linear().apply(&whole).iter().zip(&shift).map(|(w, s)| w + s).collect();
        y = lifted.iter().zip(&shift).map(|(v, s)| v - s).collect();
    }
    let image = y.iter().zip(&whole).map(|(a, b)| a + b).collect();
    Ok(Return { image, monodromy, inverse, log_det })
}

/// Exponents from the unstable eigenvalues of `Df^n` and the stable ones of
/// its inverse, so each side is computed from dominant eigenvalues.
pub fn monodromy_exponents(monodromy: &DMatrix<f64>, inverse: &DMatrix<f64>, period: u32, n_stable: usize) -> Vec<f64> {
    let d = monodromy.nrows();
    let moduli = |m: &DMatrix<f64>| -> Vec<f64> {
        let mut v: Vec<f64> = if d == 2 {
            let (tr, det) = (m.trace(), m.determinant());
            let disc = tr * tr - 4.0 * det;
            if disc >= 0.0 {
                let big = 0.5 * (tr + tr.signum() * disc.sqrt());
                vec![big.abs(), (det / big).abs()]
            } else {
                vec![det.abs().sqrt(); 2]
            }
        } else {
            m.clone().complex_eigenvalues().iter().map(|c| c.norm()).collect()
        };
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let n = period as f64;
    let forward = moduli(monodromy);
    let backward = moduli(inverse);
    let mut exps: Vec<f64> = backward[..n_stable].iter().map(|m| -m.ln() / n).collect();
    exps.extend(forward[..d - n_stable].iter().map(|m| m.ln() / n));
    exps.sort_by(f64::total_cmp);
    exps
}

/// Multiple-shooting Newton iteration for the whole orbit `x_0, ..., x_{n-1}`
/// on `G_j = F(x_j) - x_{j+1} - k_j` (indices mod `n`), started from the exact
/// orbit of the lattice seed under `A`, with step halving until `|G|` decreases.
///
/// Single shooting on `F^n(x) - x - k` has a basin of width about
/// `|beta_u|^{-n}`; the shooting system stays well conditioned in `n`.
///
/// Diverges when no halving reduces `|G|`, when an orbit point drifts more
/// than `1/2` from its seed, or after [`NEWTON_MAX_ITERS`] iterations.
pub fn newton_continue<M: TorusMap + ?Sized>(map: &M, n: u32, seed: &LatticePoint) -> Result<ToralPeriodicOrbit> {
    let d = map.dim();
    let len = n as usize;
    let diverged = || Error::NewtonDiverged { seed: seed.point.clone(), period: len };

    let den = seed.denominator;
    let mut num = seed.numerators.clone();
    let mut start = Vec::with_capacity(len * d);
    let mut jumps = Vec::with_capacity(len * d);
    for _ in 0..len {
        start.extend(num.iter().map(|v| *v as f64 / den as f64));
        let image = lattice::mul_vec(&map.linear().matrix, &num);
        jumps.extend(image.iter().map(|v| v.div_euclid(den) as f64));
        num = image.iter().map(|v| v.rem_euclid(den)).collect();
    }

    let residual = |xs: &[f64]| -> DVector<f64> {
        let mut g = DVector::zeros(len * d);
        for j in 0..len {
            let image = map.lift(&xs[j * d..(j + 1) * d]);
            let next = ((j + 1) % len) * d;
            for i in 0..d {
                g[j * d + i] = image[i] - xs[next + i] - jumps[j * d + i];
            }
        }
        g
    };
    let jacobian = |xs: &[f64]| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(len * d, len * d);
        for j in 0..len {
            m.view_mut((j * d, j * d), (d, d)).copy_from(&map.jacobian(&xs[j * d..(j + 1) * d]));
            let next = ((j + 1) % len) * d;
            for i in 0..d {
                m[(j * d + i, next + i)] -= 1.0;
            }
        }
        m
    };

    let mut xs = start.clone();
    let mut g = residual(&xs);
    for _ in 0..NEWTON_MAX_ITERS {
        let step = jacobian(&xs).lu().solve(&g).ok_or_else(diverged)?;
        if !step.amax().is_finite() {
            return Err(diverged());
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = xs.iter().zip(step.iter()).map(|(x, s)| x - t * s).collect();
            let g_trial = residual(&trial);
            if g_trial.amax() < g.amax() || t * step.amax() < NEWTON_TOL {
                xs = trial;
                g = g_trial;
                break;
            }
            t *= 0.5;
            if t < 1e-3 {
                return Err(diverged());
            }
        }
        if xs.iter().zip(&start).any(|(a, b)| (a - b).abs() > 0.5) {
            return Err(diverged());
        }
        if t * step.amax() < NEWTON_TOL {
            return finish(map, n, seed, xs[..d].to_vec());
        }
    }
    Err(diverged())
}

fn finish<M: TorusMap + ?Sized>(map: &M, n: u32, seed: &LatticePoint, x: Vec<f64>) -> Result<ToralPeriodicOrbit> {
    // shift by whole units so the stored point lies in [0, 1)^d; the integer
    // target changes but the return data does not
    let point: Vec<f64> = x.iter().map(|v| v.rem_euclid(1.0) % 1.0).collect();
    let r = return_map(map, &point, n)?;
    if torus_distance(&r.image, &point) > 1e-9 {
        return Err(Error::NewtonDiverged { seed: seed.point.clone(), period: n as usize });
    }
    let exponents = monodromy_exponents(&r.monodromy, &r.inverse, n, map.linear().split.n_stable);
    Ok(ToralPeriodicOrbit {
        point,
        period: n,
        seed: seed.point.clone(),
        monodromy: r.monodromy,
        exponents,
        jac_log: r.log_det / n as f64,
    })
}

/// Continues every lattice point of period `n`; fails on divergence or on
/// two seeds reaching the same orbit point.
pub fn continue_orbits<M: TorusMap + ?Sized>(map: &M, n: u32) -> Result<Vec<ToralPeriodicOrbit>> {
    let seeds = linear_periodic_points(map.linear(), n)?;
    let orbits: Vec<ToralPeriodicOrbit> =
        seeds.par_iter().map(|s| newton_continue(map, n, s)).collect::<Result<Vec<_>>>()?;
    if let Some((first, second)) = find_duplicate(&orbits) {
        return Err(Error::DuplicateOrbit { first, second });
    }
    Ok(orbits)
}

pub fn continue_orbits_up_to<M: TorusMap + ?Sized>(map: &M, n_max: u32) -> Result<Vec<ToralPeriodicOrbit>> {
    let mut all = Vec::new();
    for n in 1..=n_max {
        all.extend(continue_orbits(map, n)?);
    }
    Ok(all)
}

/// Indices of two points within `DUPLICATE_TOL`, by a sweep over the first
/// coordinate with wrap-around.
fn find_duplicate(orbits: &[ToralPeriodicOrbit]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..orbits.len()).collect();
    order.sort_by(|&a, &b| orbits[a].point[0].total_cmp(&orbits[b].point[0]));
    let x0 = |i: usize| orbits[order[i]].point[0];
    let close = |a: usize, b: usize| torus_distance(&orbits[a].point, &orbits[b].point) < DUPLICATE_TOL;
    let len = order.len();
    for i in 0..len {
        let mut j = i + 1;
        while j < len && x0(j) - x0(i) < DUPLICATE_TOL {
            if close(order[i], order[j]) {
                return Some((order[i].min(order[j]), order[i].max(order[j])));
            }
            j += 1;
        }
    }
    // pairs straddling 0 = 1 in the first coordinate
    let low: Vec<usize> = (0..len).take_while(|&i| x0(i) < DUPLICATE_TOL).collect();
    for i in (0..len).rev().take_while(|&i| x0(i) > 1.0 - DUPLICATE_TOL) {
        for &j in &low {
            if i != j && close(order[i], order[j]) {
                return Some((order[i].min(order[j]), order[i].max(order[j])));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Stable,
    Unstable,
}

/// `lambda^s_i` or `lambda^u_i`, `i` from 1, each side ordered by increasing modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleIndex {
    pub side: Side,
    pub index: usize,
}

impl BundleIndex {
    pub fn stable(index: usize) -> Self {
        Self { side: Side::Stable, index }
    }

    pub fn unstable(index: usize) -> Self {
        Self { side: Side::Unstable, index }
    }

    /// Position in the ascending exponent list.
    pub fn position(&self, n_stable: usize) -> usize {
        match self.side {
            Side::Stable => self.index - 1,
            Side::Unstable => n_stable + self.index - 1,
        }
    }

    pub fn label(&self) -> String {
        match self.side {
            Side::Stable => format!("s{}", self.index),
            Side::Unstable => format!("u{}", self.index),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexSpread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub gap_to_linear: f64,
}

/// Statistics of one exponent over all orbits, against `log |beta_i|`.
pub fn per_index_spread(orbits: &[ToralPeriodicOrbit], linear: &IntAutomorphism, index: BundleIndex) -> Result<IndexSpread> {
    if orbits.is_empty() {
        return Err(Error::InvalidArgument("no periodic orbits".into()));
    }
    let k = linear.split.n_stable;
    let side_len = match index.side {
        Side::Stable => k,
        Side::Unstable => linear.split.n_unstable,
    };
    if index.index == 0 || index.index > side_len {
        return Err(Error::InvalidArgument(format!("exponent index {} out of range", index.label())));
    }
    for o in orbits {
        let negative = o.exponents.iter().filter(|e| **e < 0.0).count();
        if negative != k {
            return Err(Error::SignatureMismatch { point: o.point.clone() });
        }
    }
    let pos = index.position(k);
    let values: Vec<f64> = orbits.iter().map(|o| o.exponents[pos]).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let target = linear.split.exponents()[pos];
    Ok(IndexSpread { mean, min, max, spread: max - min, gap_to_linear: (mean - target).abs() })
}

/// `max |jac_log|` over the orbits.
pub fn conservativity_indicator(orbits: &[ToralPeriodicOrbit]) -> f64 {
    orbits.iter().map(|o| o.jac_log.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::dynamics::{ConjugateToral, ToralMap, TorusDiffeo, TrigField, TrigMode};

    fn cat() -> IntAutomorphism {
        IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    fn perturbed(eps: f64) -> ToralMap {
        let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)]).unwrap();
        ToralMap::new(cat(), p, eps).unwrap()
    }

    fn conjugate() -> ConjugateToral {
        let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)]).unwrap();
        ConjugateToral::new(cat(), TorusDiffeo::new(q).unwrap()).unwrap()
    }

    #[test]
    fn cat_map_lattice_points() {
        let a = cat();
        let p1 = linear_periodic_points(&a, 1).unwrap();
        assert_eq!(p1.len(), 1);
        assert_eq!(p1[0].point, vec![0.0, 0.0]);
        let p2 = linear_periodic_points(&a, 2).unwrap();
        assert_eq!(p2.len(), 5);
        let af = a.to_f64();
        for n in 1..=6 {
            let pts = linear_periodic_points(&a, n).unwrap();
            assert_eq!(pts.len() as i128, linear_periodic_count(&a, n));
            let an = af.pow(n);
            for p in &pts {
                let x = DVector::from_vec(p.point.clone());
                let y = &an * &x - &x;
                for (i, v) in y.iter().enumerate() {
                    assert!((v - p.k[i] as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn lattice_points_are_distinct_in_three_dimensions() {
        let a = IntAutomorphism::new(vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 1]]).unwrap();
        for n in 1..=3 {
            let pts = linear_periodic_points(&a, n).unwrap();
            assert_eq!(pts.len() as i128, linear_periodic_count(&a, n));
            let mut keys: Vec<Vec<i128>> = pts.iter().map(|p| p.numerators.clone()).collect();
            keys.sort();
            keys.dedup();
            assert_eq!(keys.len(), pts.len());
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(linear_periodic_points(&cat(), 12), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn zero_perturbation_is_identity() {
        let f = ToralMap::unperturbed(cat());
        let golden = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        for o in continue_orbits(&f, 4).unwrap() {
            assert!(torus_distance(&o.point, &o.seed) < 1e-14);
            assert!((o.exponents[1] - golden).abs() < 1e-12);
            assert!((o.exponents[0] + golden).abs() < 1e-12);
            assert_eq!(o.jac_log, 0.0);
        }
    }

    #[test]
    fn perturbed_counts_match_linear_model() {
        let f = perturbed(0.05);
        for n in 1..=5 {
            let orbits = continue_orbits(&f, n).unwrap();
            assert_eq!(orbits.len() as i128, linear_periodic_count(&f.linear, n));
            for o in &orbits {
                let s: f64 = o.exponents.iter().sum();
                assert!((s - o.jac_log).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conjugate_model_has_linear_data() {
        let g = conjugate();
        let orbits = continue_orbits_up_to(&g, 6).unwrap();
        assert_eq!(orbits.len(), 1 + 5 + 16 + 45 + 121 + 320);
        for idx in [BundleIndex::stable(1), BundleIndex::unstable(1)] {
            let s = per_index_spread(&orbits, &g.linear, idx).unwrap();
            assert!(s.spread < 1e-8 && s.gap_to_linear < 1e-8, "{s:?}");
        }
        assert!(conservativity_indicator(&orbits) < 1e-8);
    }

    #[test]
    fn generic_perturbation_breaks_constant_data() {
        let f = perturbed(0.05);
        let orbits = continue_orbits_up_to(&f, 5).unwrap();
        let s = per_index_spread(&orbits, &f.linear, BundleIndex::unstable(1)).unwrap();
        assert!(s.spread > 1e-3);
        assert!(conservativity_indicator(&orbits) > 1e-3);
    }

    #[test]
    fn duplicate_detection() {
        let f = ToralMap::unperturbed(cat());
        let mut orbits = continue_orbits(&f, 2).unwrap();
        assert!(find_duplicate(&orbits).is_none());
        let mut copy = orbits[3].clone();
        copy.point[1] += 1e-10;
        orbits.push(copy);
        assert_eq!(find_duplicate(&orbits), Some((3, 5)));
        let mut wrap = orbits[0].clone();
        wrap.point = vec![1.0 - 1e-10, 0.0];
        orbits.push(wrap);
        assert!(find_duplicate(&orbits[..1].iter().chain(&orbits[6..]).cloned().collect::<Vec<_>>()).is_some());
    }

    #[test]
    fn signature_mismatch() {
        let f = ToralMap::unperturbed(cat());
        let mut orbits = continue_orbits(&f, 1).unwrap();
        orbits[0].exponents = vec![0.1, 0.2];
        assert!(matches!(per_index_spread(&orbits, &f.linear, BundleIndex::unstable(1)), Err(Error::SignatureMismatch { .. })));
    }
}
