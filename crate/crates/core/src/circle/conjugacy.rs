//! Conjugacies between an expanding circle map `f` and its linear model `E_d`,
//! normalized so that `f o h = h o E_d`, and numerical grading of their
//! regularity.

use super::dynamics::CircleMap;
use super::periodic::anchored_partition;
use super::transfer::DensityApprox;
use crate::error::{Error, Result};
use crate::numerics::{circle_distance, linear_fit};

/// `|h(1) - h(0) - 1|` above which an ODE solution is rejected.
pub const WRAP_TOL: f64 = 1e-6;
/// Smallest interpolated density accepted by the ODE route.
pub const DENSITY_FLOOR: f64 = 1e-6;
pub const DEFAULT_ODE_STEPS: usize = 1 << 14;

/// Samples of a monotone degree-one circle map at `t_j = j / base^level`,
/// `j = 0..=base^level`, stored as lift values (`h(1) = h(0) + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyApprox {
    pub base: usize,
    pub level: usize,
    pub values: Vec<f64>,
}

impl ConjugacyApprox {
    pub fn identity(base: usize, level: usize) -> Self {
        let n = base.pow(level as u32);
        Self { base, level, values: (0..=n).map(|j| j as f64 / n as f64).collect() }
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.intervals() as f64
    }

    /// Linear interpolation, extended to all of `R` as a degree-one lift.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.intervals();
        let whole = t.floor();
        let s = (t - whole) * n as f64;
        let j = (s.floor() as usize).min(n - 1);
        let w = s - j as f64;
        whole + (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }

    pub fn is_strictly_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }

    /// `max_j dist(f(h(t_j)), h(d t_j mod 1))` on the circle.
    pub fn conjugacy_residual<M: CircleMap + ?Sized>(&self, map: &M) -> f64 {
        let d = map.degree() as f64;
        (0..self.intervals())
            .map(|j| {
                let lhs = map.lift(self.values[j]);
                let rhs = self.eval((d * self.t(j)).rem_euclid(1.0));
                circle_distance(lhs, rhs)
            })
            .fold(0.0, f64::max)
    }

    /// Difference quotients `(h(t_{j+1}) - h(t_j)) / (t_{j+1} - t_j)` at the finest level.
    pub fn quotient_range(&self) -> (f64, f64) {
        self.quotients_at(self.level)
    }

    fn quotients_at(&self, m: usize) -> (f64, f64) {
        let stride = self.base.pow((self.level - m) as u32);
        let scale = self.base.pow(m as u32) as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut j = 0;
        while j < self.intervals() {
            let q = (self.values[j + stride] - self.values[j]) * scale;
            lo = lo.min(q);
            hi = hi.max(q);
            j += stride;
        }
        (lo, hi)
    }
}

/// `h(j / d^k)` = `j`-th preimage of the anchor fixed point under `f^k`.
///
/// The linear partition `{j / d^k}` is carried onto the `f`-partition in order,
/// both anchored at their fixed point near 0, so the residual vanishes up to
/// root-solver precision.
pub fn symbolic_conjugacy<M: CircleMap + ?Sized>(map: &M, k: usize) -> Result<ConjugacyApprox> {
    let partition = anchored_partition(map, k)?;
    let mut values = partition.breakpoints;
    values.push(values[0] + 1.0);
    Ok(ConjugacyApprox { base: map.degree() as usize, level: k, values })
}

/// Solves `z' = w_source(t) / w_target(z)`, `z(0) = z0`, on `[0, 1]` by RK4.
///
/// The solution pushes the source measure onto the target measure; `steps`
/// must be a power of two.
pub fn ode_conjugacy(
    source: &DensityApprox,
    target: &DensityApprox,
    z0: f64,
    steps: usize,
) -> Result<ConjugacyApprox> {
    if steps < 2 || !steps.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("ODE steps must be a power of two, got {steps}")));
    }
    let density = |w: &DensityApprox, x: f64| -> Result<f64> {
        let v = w.interpolate(x);
        if v < DENSITY_FLOOR {
            Err(Error::DensityVanishes { at: x, value: v })
        } else {
            Ok(v)
        }
    };
    let rhs = |t: f64, z: f64| -> Result<f64> { Ok(density(source, t)? / density(target, z)?) };

    let h = 1.0 / steps as f64;
    let mut values = Vec::with_capacity(steps + 1);
    let mut z = z0;
    values.push(z);
    for j in 0..steps {
        let t = j as f64 * h;
        let k1 = rhs(t, z)?;
        let k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1)?;
        let k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2)?;
        let k4 = rhs(t + h, z + h * k3)?;
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        values.push(z);
    }
    let increment = values[steps] - values[0];
    if (increment - 1.0).abs() > WRAP_TOL {
        return Err(Error::EndpointMismatch { increment });
    }
    // pin the degree exactly; the solver drift is below WRAP_TOL
    values[steps] = values[0] + 1.0;
    Ok(ConjugacyApprox { base: 2, level: steps.trailing_zeros() as usize, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    /// Scale index `m`; intervals have length `base^{-m}`.
    pub m: usize,
    pub oscillation: f64,
    pub quotient_min: f64,
    pub quotient_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    pub alpha: f64,
    pub r2: f64,
    pub rows: Vec<ScaleRow>,
}

/// Smallest level accepted by [`holder_exponent`].
pub const MIN_HOLDER_LEVEL: usize = 6;

/// Slope of `log osc_m(h)` against `log base^{-m}` for `m = 2..=level`, where
/// `osc_m` is the largest `h`-image of a scale-`m` interval.
pub fn holder_exponent(hc: &ConjugacyApprox) -> Result<HolderFit> {
    if hc.level < MIN_HOLDER_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "Hölder regression needs level >= {MIN_HOLDER_LEVEL}, got {}",
            hc.level
        )));
    }
    let rows: Vec<ScaleRow> = (2..=hc.level)
        .map(|m| {
            let (qmin, qmax) = hc.quotients_at(m);
            let width = (hc.base as f64).powi(-(m as i32));
            ScaleRow { m, oscillation: qmax * width, quotient_min: qmin, quotient_max: qmax }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| -(r.m as f64) * (hc.base as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.oscillation.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(HolderFit { alpha: fit.slope, r2: fit.r2, rows })
}

/// True iff every finest-level difference quotient lies in `[1/C^2, C^2]`.
pub fn bilipschitz_certificate(hc: &ConjugacyApprox, c: f64) -> bool {
    let (lo, hi) = hc.quotient_range();
    let c2 = c * c;
    lo >= 1.0 / c2 && hi <= c2
}
