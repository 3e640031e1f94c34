//! Expanding circle maps given by explicit lifts.
//!
//! A map of the circle is handled through its lift `F: R -> R` with
//! `F(x + 1) = F(x) + d`. The concrete family is the linear lift `d x` plus a
//! finite trigonometric polynomial, which keeps every derivative available in
//! closed form. Smooth conjugates of the linear model, which are not
//! trigonometric polynomials, implement the same [`CircleMap`] trait.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{periodic_min, solve_increasing};

/// Grid used for the cached derivative bounds and default certification.
pub const DEFAULT_GRID: usize = 4096;

/// One harmonic `a sin(2 pi k x) + b cos(2 pi k x)`, amplitudes in map units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub k: u32,
    pub a: f64,
    pub b: f64,
}

impl TrigTerm {
    pub fn new(k: u32, a: f64, b: f64) -> Self {
        Self { k, a, b }
    }

    /// Harmonic whose first derivative is `a' cos(2 pi k x) - b' sin(2 pi k x)`.
    pub fn from_slope(k: u32, a_slope: f64, b_slope: f64) -> Self {
        let w = 2.0 * PI * k as f64;
        Self { k, a: a_slope / w, b: b_slope / w }
    }

    fn nth_derivative(&self, x: f64, order: u32) -> f64 {
        let w = 2.0 * PI * self.k as f64;
        let (s, c) = (w * x).sin_cos();
        // d/dx rotates (sin, cos) -> (cos, -sin)
        let (ds, dc) = match order % 4 {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        };
        w.powi(order as i32) * (self.a * ds + self.b * dc)
    }
}

/// Finite trigonometric polynomial with zero mean-free constraint left to the caller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigSeries {
    pub terms: Vec<TrigTerm>,
}

impl TrigSeries {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `order = 0` is the value itself.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        self.terms.iter().map(|t| t.nth_derivative(x, order)).sum()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// Sum of amplitudes; bounds `sup |series|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.a.hypot(t.b)).sum()
    }

    fn max_wave_number(&self) -> u32 {
        self.terms.iter().map(|t| t.k).max().unwrap_or(0)
    }
}

/// Extremal derivative data of a circle map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeBounds {
    /// `inf F'`
    pub lambda_min: f64,
    /// `sup F'`
    pub lambda_max: f64,
    /// `sup |F''|`
    pub m2: f64,
}

/// An orientation-preserving circle endomorphism of degree `d >= 1`, given by its lift.
pub trait CircleMap: Send + Sync {
    fn degree(&self) -> u32;

    /// Lift value `F(x)`.
    fn lift(&self, x: f64) -> f64;

    /// Analytic derivative of order 1 or 2.
    fn derivative(&self, x: f64, order: u32) -> f64;

    /// Grid size adequate for resolving the derivative extrema.
    fn resolution_hint(&self) -> usize {
        DEFAULT_GRID
    }

    fn bounds(&self) -> DerivativeBounds {
        compute_bounds(self)
    }

    /// Circle point `F(x) mod 1`.
    fn eval_circle(&self, x: f64) -> f64 {
        self.lift(x).rem_euclid(1.0)
    }

    /// Lift of the `n`-th iterate, evaluated with the integer part of the
    /// orbit carried separately so that the argument of `lift` stays in `[0, 1)`.
    fn lift_iterate(&self, x: f64, n: usize) -> f64 {
        let d = self.degree() as f64;
        let mut whole = x.floor();
        let mut frac = x - whole;
        for _ in 0..n {
            let y = self.lift(frac);
            let yw = y.floor();
            whole = whole * d + yw;
            frac = y - yw;
        }
        whole + frac
    }

    /// `(F^n)'(x)` as a product of `F'` along the orbit.
    fn iterate_derivative(&self, x: f64, n: usize) -> f64 {
        let mut p = 1.0;
        let mut y = x.rem_euclid(1.0);
        for _ in 0..n {
            p *= self.derivative(y, 1);
            y = self.eval_circle(y);
        }
        p
    }

    /// The point `x` in `[0, 1]` with `F(x) = target`; requires
    /// `F(0) <= target <= F(1)`.
    fn branch_inverse(&self, target: f64) -> f64 {
        solve_increasing(|x| self.lift(x) - target, |x| self.derivative(x, 1), 0.0, 1.0)
    }
}

fn compute_bounds<M: CircleMap + ?Sized>(map: &M) -> DerivativeBounds {
    let grid = map.resolution_hint();
    let (_, lambda_min) = periodic_min(|x| map.derivative(x, 1), grid);
    let (_, neg_max) = periodic_min(|x| -map.derivative(x, 1), grid);
    let (_, neg_m2) = periodic_min(|x| -map.derivative(x, 2).abs(), grid);
    DerivativeBounds {
        lambda_min,
        lambda_max: -neg_max,
        m2: -neg_m2,
    }
}

/// `F(x) = d x + sum_k [a_k sin(2 pi k x) + b_k cos(2 pi k x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleLift {
    degree: u32,
    series: TrigSeries,
    bounds: DerivativeBounds,
}

impl CircleLift {
    /// Builds the lift and caches its derivative bounds. Fails unless `F' > 0`.
    pub fn new(degree: u32, terms: Vec<TrigTerm>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidArgument(format!("degree must be at least 2, got {degree}")));
        }
        let mut lift = Self {
            degree,
            series: TrigSeries::new(terms),
            bounds: DerivativeBounds { lambda_min: degree as f64, lambda_max: degree as f64, m2: 0.0 },
        };
        if !lift.series.is_empty() {
            lift.bounds = compute_bounds(&lift);
        }
        if lift.bounds.lambda_min <= 0.0 {
            return Err(Error::NotDiffeomorphism { min_derivative: lift.bounds.lambda_min });
        }
        Ok(lift)
    }

    /// The linear model `E_d(x) = d x mod 1`.
    pub fn linear(degree: u32) -> Self {
        Self::new(degree, Vec::new()).expect("linear lift of degree >= 2")
    }

    pub fn series(&self) -> &TrigSeries {
        &self.series
    }
}

impl CircleMap for CircleLift {
    fn degree(&self) -> u32 {
        self.degree
    }

    fn lift(&self, x: f64) -> f64 {
        self.degree as f64 * x + self.series.value(x)
    }

    fn derivative(&self, x: f64, order: u32) -> f64 {
        let linear = if order == 1 { self.degree as f64 } else { 0.0 };
        linear + self.series.derivative(x, order)
    }

    fn resolution_hint(&self) -> usize {
        DEFAULT_GRID.max(256 * self.series.max_wave_number() as usize)
    }

    fn bounds(&self) -> DerivativeBounds {
        self.bounds
    }
}

/// Degree-one circle diffeomorphism `H(x) = x + series(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDiffeo {
    series: TrigSeries,
}

impl CircleDiffeo {
    pub fn new(terms: Vec<TrigTerm>) -> Result<Self> {
        let h = Self { series: TrigSeries::new(terms) };
        let (_, min_slope) = periodic_min(|x| h.derivative(x, 1), DEFAULT_GRID);
        if min_slope <= 0.0 {
            return Err(Error::NotDiffeomorphism { min_derivative: min_slope });
        }
        Ok(h)
    }

    pub fn eval(&self, x: f64) -> f64 {
        x + self.series.value(x)
    }

    /// Derivative of order 1 or 2.
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let linear = if order == 1 { 1.0 } else { 0.0 };
        linear + self.series.derivative(x, order)
    }

    /// `H^{-1}(y)` as a lift.
    pub fn inverse(&self, y: f64) -> f64 {
        let r = self.series.amplitude_bound() + 1e-12;
        solve_increasing(|x| self.eval(x) - y, |x| self.derivative(x, 1), y - r, y + r)
    }

    /// `(H^{-1})'(y)`.
    pub fn inverse_derivative(&self, y: f64) -> f64 {
        1.0 / self.derivative(self.inverse(y), 1)
    }
}

/// `g = H o E_d o H^{-1}`: a nonlinear map smoothly conjugate to the linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothConjugate {
    degree: u32,
    h: CircleDiffeo,
}

impl SmoothConjugate {
    pub fn new(degree: u32, h: CircleDiffeo) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidArgument(format!("degree must be at least 2, got {degree}")));
        }
        Ok(Self { degree, h })
    }

    pub fn conjugacy(&self) -> &CircleDiffeo {
        &self.h
    }
}

impl CircleMap for SmoothConjugate {
    fn degree(&self) -> u32 {
        self.degree
    }

    fn lift(&self, x: f64) -> f64 {
        self.h.eval(self.degree as f64 * self.h.inverse(x))
    }

    fn derivative(&self, x: f64, order: u32) -> f64 {
        let d = self.degree as f64;
        let y = self.h.inverse(x);
        let z = d * y;
        let hy = self.h.derivative(y, 1);
        let hz = self.h.derivative(z, 1);
        match order {
            1 => d * hz / hy,
            2 => {
                let hyy = self.h.derivative(y, 2);
                let hzz = self.h.derivative(z, 2);
                d * (d * hzz / (hy * hy) - hz * hyy / (hy * hy * hy))
            }
            _ => panic!("derivative order {order} not supported"),
        }
    }
}

/// Lower bound on `inf F'` from grid evaluation plus Lipschitz slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCertificate {
    pub lambda_min_bound: f64,
    pub ok: bool,
}

impl ExpansionCertificate {
    pub fn require(self) -> Result<Self> {
        if self.ok {
            Ok(self)
        } else {
            Err(Error::NotExpanding { bound: self.lambda_min_bound })
        }
    }
}

/// `min_grid F' - sup|F''| / grid_n`, with `ok` when the bound exceeds 1.
pub fn check_expanding<M: CircleMap + ?Sized>(map: &M, grid_n: usize) -> ExpansionCertificate {
    assert!(grid_n >= 2, "grid_n must be at least 2");
    let h = 1.0 / grid_n as f64;
    let grid_min = (0..grid_n)
        .map(|i| map.derivative(i as f64 * h, 1))
        .fold(f64::INFINITY, f64::min);
    let bound = grid_min - map.bounds().m2 * h;
    ExpansionCertificate { lambda_min_bound: bound, ok: bound > 1.0 }
}

/// Bounded-distortion constant `C_f = exp(M / (1 - 1/lambda))` with
/// `M = sup|F''| / inf F'` and `lambda = inf F'`.
pub fn distortion_constant<M: CircleMap + ?Sized>(map: &M) -> Result<f64> {
    check_expanding(map, DEFAULT_GRID).require()?;
    let b = map.bounds();
    let m = b.m2 / b.lambda_min;
    Ok((m / (1.0 - 1.0 / b.lambda_min)).exp())
}

/// Fixed point of the circle map closest to 0, as a lift value in `[-1/2, 1/2)`.
pub fn anchor_fixed_point<M: CircleMap + ?Sized>(map: &M) -> f64 {
    let g = |x: f64| map.lift(x) - x;
    let lo = g(-0.5);
    let hi = g(0.5);
    let mut best = f64::NAN;
    let mut m = lo.ceil() as i64;
    while (m as f64) < hi {
        let target = m as f64;
        let x = solve_increasing(|x| g(x) - target, |x| map.derivative(x, 1) - 1.0, -0.5, 0.5);
        if best.is_nan() || x.abs() < best.abs() {
            best = x;
        }
        m += 1;
    }
    best
}
