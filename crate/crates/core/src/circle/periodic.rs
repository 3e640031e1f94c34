//! Periodic orbits of expanding circle maps and the injectivity partitions of
//! their iterates.
//!
//! Periodic points of period `n` are the roots of `G(x) = F^n(x) - x - m`.
//! Since `(F^n)' > 1`, `G` is strictly increasing on `[0, 1)` and sweeps an
//! interval of length `d^n - 1`, so each admissible integer `m` brackets
//! exactly one root and the enumeration is complete.

use rayon::prelude::*;

use super::dynamics::{anchor_fixed_point, distortion_constant, CircleMap};
use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, solve_increasing};

/// Largest number of points any enumeration may produce.
pub const PERIOD_BUDGET: u128 = 1 << 20;

/// Threshold on the exponent spread for declaring constant periodic data.
pub const TOL_CONSTANT_DATA: f64 = 1e-6;
/// Relative slack on the distortion sandwich for rounding in the ratios.
pub const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOrbit {
    /// Point of the orbit in `[0, 1)`.
    pub point: f64,
    pub period: usize,
    /// `|DF^n(p)|`
    pub multiplier: f64,
    /// `(1/n) log |DF^n(p)|`, in nats.
    pub exponent: f64,
}

fn check_budget(degree: u32, n: usize, budget: u128) -> Result<u128> {
    let count = (degree as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::BudgetExceeded { requested: count, budget });
    }
    Ok(count)
}

/// Log-derivative sum along the orbit of `x`, returned as (multiplier, exponent).
fn orbit_exponent<M: CircleMap + ?Sized>(map: &M, x: f64, n: usize) -> (f64, f64) {
    let mut y = x;
    let mut log_sum = 0.0;
    for _ in 0..n {
        log_sum += map.derivative(y, 1).ln();
        y = map.eval_circle(y);
    }
    (log_sum.exp(), log_sum / n as f64)
}

/// All `d^n - 1` points fixed by `F^n`, ordered by position on the circle.
pub fn periodic_points<M: CircleMap + ?Sized>(map: &M, n: usize) -> Result<Vec<PeriodicOrbit>> {
    periodic_points_with_budget(map, n, PERIOD_BUDGET)
}

pub fn periodic_points_with_budget<M: CircleMap + ?Sized>(
    map: &M,
    n: usize,
    budget: u128,
) -> Result<Vec<PeriodicOrbit>> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let count = check_budget(map.degree(), n, budget)? as i64;
    let start = map.lift_iterate(0.0, n);
    let m0 = start.ceil() as i64;
    let g = |x: f64, m: i64| map.lift_iterate(x, n) - x - m as f64;

    (0..count - 1)
        .into_par_iter()
        .map(|j| {
            let m = m0 + j;
            if !(g(0.0, m) <= 0.0 && g(1.0, m) > 0.0) {
                return Err(Error::RootBracketFailure { period: n, branch: m });
            }
            let mut x = bisect_increasing(|x| g(x, m), 0.0, 1.0, 1e-12);
            let slope = map.iterate_derivative(x, n) - 1.0;
            let polished = x - g(x, m) / slope;
            if (0.0..1.0).contains(&polished) {
                x = polished;
            }
            let (multiplier, exponent) = orbit_exponent(map, x, n);
            Ok(PeriodicOrbit { point: x, period: n, multiplier, exponent })
        })
        .collect()
}

/// Orbits of every period `1..=n_max`, concatenated in period order.
pub fn periodic_points_up_to<M: CircleMap + ?Sized>(map: &M, n_max: usize) -> Result<Vec<PeriodicOrbit>> {
    let mut all = Vec::new();
    for n in 1..=n_max {
        all.extend(periodic_points(map, n)?);
    }
    Ok(all)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDataStatistic {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `max - min` of the exponents.
    pub spread: f64,
    /// `|mean - log d|`
    pub log_d_gap: f64,
}

impl ConstantDataStatistic {
    pub fn is_constant(&self, tol: f64) -> bool {
        self.spread < tol
    }
}

pub fn constant_data_statistic(orbits: &[PeriodicOrbit], degree: u32) -> Result<ConstantDataStatistic> {
    if orbits.is_empty() {
        return Err(Error::InvalidArgument("no periodic orbits supplied".into()));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for o in orbits {
        min = min.min(o.exponent);
        max = max.max(o.exponent);
        sum += o.exponent;
    }
    let mean = sum / orbits.len() as f64;
    Ok(ConstantDataStatistic {
        mean,
        min,
        max,
        spread: max - min,
        log_d_gap: (mean - (degree as f64).ln()).abs(),
    })
}

/// The `d^n` maximal intervals of injectivity of `f^n`, delimited by the
/// preimages of a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectivityPartition {
    pub period: usize,
    /// Sorted lift values in `[start, start + 1)`.
    pub breakpoints: Vec<f64>,
}

impl InjectivityPartition {
    fn from_sorted(period: usize, breakpoints: Vec<f64>) -> Self {
        Self { period, breakpoints }
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// `[left, right]` of interval `j`, with `right` lifted past the wrap.
    pub fn interval(&self, j: usize) -> (f64, f64) {
        let left = self.breakpoints[j];
        let right = if j + 1 < self.breakpoints.len() {
            self.breakpoints[j + 1]
        } else {
            self.breakpoints[0] + 1.0
        };
        (left, right)
    }

    pub fn sizes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| {
            let (l, r) = self.interval(j);
            r - l
        })
        .collect()
    }

    /// Index of the interval containing circle point `x`. A point on a shared
    /// endpoint belongs to the interval on its left.
    pub fn locate(&self, x: f64) -> usize {
        let start = self.breakpoints[0];
        let lifted = start + (x - start).rem_euclid(1.0);
        let idx = self.breakpoints.partition_point(|&b| b < lifted);
        // idx = number of breakpoints strictly left of x
        if idx == 0 {
            self.len() - 1
        } else {
            idx - 1
        }
    }

    /// For each interval, a periodic point lying in its closure (within `tol`).
    pub fn match_orbits<'a>(&self, orbits: &'a [PeriodicOrbit], tol: f64) -> Vec<Option<&'a PeriodicOrbit>> {
        let start = self.breakpoints[0];
        let mut lifted: Vec<(f64, &PeriodicOrbit)> = orbits
            .iter()
            .map(|o| (start + (o.point - start).rem_euclid(1.0), o))
            .collect();
        lifted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let wrapped: Vec<(f64, &PeriodicOrbit)> = lifted
            .iter()
            .map(|&(x, o)| (x, o))
            .chain(lifted.iter().map(|&(x, o)| (x + 1.0, o)))
            .chain(lifted.iter().take(1).map(|&(x, o)| (x - 1.0, o)))
            .collect();
        (0..self.len())
            .map(|j| {
                let (l, r) = self.interval(j);
                wrapped
                    .iter()
                    .filter(|(x, _)| *x >= l - tol && *x <= r + tol)
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|&(_, o)| o)
            })
            .collect()
    }
}

/// The `d` solutions in `[start, start + 1)` of `F(x) = y + m0 + i`, `i = 0..d`.
fn branch_preimages<M: CircleMap + ?Sized>(map: &M, y: f64, start: f64, m0: i64, skip_first: bool) -> Vec<f64> {
    let d = map.degree() as i64;
    (0..d)
        .filter(|&i| !(skip_first && i == 0))
        .map(|i| {
            let target = y + (m0 + i) as f64;
            solve_increasing(|x| map.lift(x) - target, |x| map.derivative(x, 1), start, start + 1.0)
        })
        .collect()
}

/// Preimages under `f^n` of the circle point `base`, as a partition of `[0, 1)`.
pub fn injectivity_partition<M: CircleMap + ?Sized>(map: &M, n: usize, base: f64) -> Result<InjectivityPartition> {
    check_budget(map.degree(), n, PERIOD_BUDGET)?;
    let f0 = map.lift(0.0);
    let mut level = vec![base.rem_euclid(1.0)];
    for _ in 0..n {
        level = level
            .par_iter()
            .flat_map_iter(|&y| {
                let m0 = (f0 - y).ceil() as i64;
                branch_preimages(map, y, 0.0, m0, false)
                    .into_iter()
                    .map(|x| x.rem_euclid(1.0))
            })
            .collect();
    }
    level.sort_by(f64::total_cmp);
    Ok(InjectivityPartition::from_sorted(n, level))
}

/// Preimages under `f^k` of the anchor fixed point `p0`, as sorted lift values
/// in `[p0, p0 + 1)`.
///
/// Built level by level, pulling back only the points new at the previous
/// level, so level-`k` points reappear bit-for-bit at level `k + 1`.
pub fn anchored_partition<M: CircleMap + ?Sized>(map: &M, k: usize) -> Result<InjectivityPartition> {
    check_budget(map.degree(), k, PERIOD_BUDGET)?;
    let p0 = anchor_fixed_point(map);
    let m0 = (map.lift(p0) - p0).round() as i64;
    let lift_into = |x: f64| p0 + (x - p0).rem_euclid(1.0);
    let mut all = vec![p0];
    let mut fresh = vec![p0];
    for level in 0..k {
        fresh = fresh
            .par_iter()
            .flat_map_iter(|&y| branch_preimages(map, y, p0, m0, level == 0).into_iter().map(lift_into))
            .collect();
        all.extend_from_slice(&fresh);
    }
    all.sort_by(f64::total_cmp);
    Ok(InjectivityPartition::from_sorted(k, all))
}

/// `|I_{n,j}| |DF^n(p_{n,j})|` for every interval of an anchored partition.
pub fn interval_multiplier_products(partition: &InjectivityPartition, orbits: &[PeriodicOrbit]) -> Vec<Option<f64>> {
    let sizes = partition.sizes();
    partition
        .match_orbits(orbits, 1e-9)
        .into_iter()
        .zip(sizes)
        .map(|(o, s)| o.map(|o| o.multiplier * s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityRow {
    pub n: usize,
    /// `min_j d^n |I_{n,j}|`
    pub min_ratio: f64,
    /// `max_j d^n |I_{n,j}|`
    pub max_ratio: f64,
    /// `d^n / lambda^n` with `log lambda` the mean periodic exponent.
    pub growth_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub distortion_constant: f64,
    pub statistic: ConstantDataStatistic,
    pub rows: Vec<InequalityRow>,
}

impl InequalityReport {
    /// Every ratio in `[1/C^2, C^2]`, up to a relative rounding slack of
    /// [`RATIO_SLACK`].
    pub fn within_bounds(&self) -> bool {
        let c2 = self.distortion_constant * self.distortion_constant * (1.0 + RATIO_SLACK);
        let inside = |r: f64| r * c2 >= 1.0 && r <= c2;
        self.rows.iter().all(|r| inside(r.min_ratio) && inside(r.max_ratio) && inside(r.growth_ratio))
    }
}

/// Bi-Lipschitz inequalities comparing `f`-partitions with the linear `d^{-n}`
/// partition. Requires constant periodic data at tolerance `tol_cd`.
pub fn inequality_report<M: CircleMap + ?Sized>(
    map: &M,
    n_max: usize,
    tol_cd: f64,
) -> Result<InequalityReport> {
    let c = distortion_constant(map)?;
    let orbits = periodic_points_up_to(map, n_max)?;
    let statistic = constant_data_statistic(&orbits, map.degree())?;
    if !statistic.is_constant(tol_cd) {
        return Err(Error::ConstantDataViolated {
            min_exponent: statistic.min,
            max_exponent: statistic.max,
        });
    }
    let d = map.degree() as f64;
    let lambda = statistic.mean.exp();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let partition = anchored_partition(map, n)?;
        let scale = d.powi(n as i32);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in partition.sizes() {
            lo = lo.min(scale * s);
            hi = hi.max(scale * s);
        }
        rows.push(InequalityRow {
            n,
            min_ratio: lo,
            max_ratio: hi,
            growth_ratio: (d / lambda).powi(n as i32),
        });
    }
    Ok(InequalityReport { distortion_constant: c, statistic, rows })
}
