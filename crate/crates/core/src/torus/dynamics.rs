//! Hyperbolic toral automorphisms and their perturbations.
//!
//! Maps are handled through lifts `F: R^d -> R^d` with `F(x + k) = F(x) + A k`
//! for integer `k`. Points are `Vec<f64>`, Jacobians are `DMatrix<f64>`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use super::lattice::{self, IntMatrix};
use crate::error::{Error, Result};

/// Eigenvalues closer than this to the unit circle are rejected.
pub const HYPERBOLICITY_TOL: f64 = 1e-9;
/// Opening of the standard cones in eigencoordinates.
pub const CONE_OPENING: f64 = 0.5;

/// Real hyperbolic splitting of an automorphism.
#[derive(Debug, Clone)]
pub struct EigenSplit {
    /// Sorted by modulus, ascending.
    pub eigenvalues: Vec<Complex<f64>>,
    pub n_stable: usize,
    pub n_unstable: usize,
    /// Orthonormal basis of `E^s`, `d x k`.
    pub stable_basis: DMatrix<f64>,
    /// Orthonormal basis of `E^u`, `d x n`.
    pub unstable_basis: DMatrix<f64>,
    /// `[U | S]`; eigencoordinates are `basis_inv * v`.
    pub basis: DMatrix<f64>,
    pub basis_inv: DMatrix<f64>,
    /// Unit eigenvectors in eigenvalue order, when the spectrum is real and simple.
    pub eigenvectors: Option<Vec<DVector<f64>>>,
    pub real_simple: bool,
    /// Advisory: no monic integer factor of degree `<= d/2` was found among
    /// products of eigenvalue subsets.
    pub irreducible: bool,
}

impl EigenSplit {
    /// `log |beta_i|`, ascending.
    pub fn exponents(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|b| b.norm().ln()).collect()
    }

    /// Sum of the unstable exponents, the topological entropy of the automorphism.
    pub fn entropy(&self) -> f64 {
        self.exponents()[self.n_stable..].iter().sum()
    }
}

/// Integer matrix with `|det| = 1` and no eigenvalue on the unit circle.
#[derive(Debug, Clone)]
pub struct IntAutomorphism {
    pub matrix: IntMatrix,
    pub inverse: IntMatrix,
    pub det: i128,
    pub split: EigenSplit,
}

impl IntAutomorphism {
    pub fn new(matrix: IntMatrix) -> Result<Self> {
        let d = matrix.len();
        if d == 0 || matrix.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("automorphism matrix must be square".into()));
        }
        let det = lattice::det(&matrix);
        if det.abs() != 1 {
            return Err(Error::NotAutomorphism { det });
        }
        let adj = lattice::adjugate(&matrix);
        let inverse = adj.iter().map(|r| r.iter().map(|v| v * det).collect()).collect();
        let split = eigen_split(&matrix)?;
        Ok(Self { matrix, inverse, det, split })
    }

    /// Also requires a real simple spectrum, the setting in which periodic data
    /// reduces to eigenvalue moduli.
    pub fn with_simple_spectrum(matrix: IntMatrix) -> Result<Self> {
        let a = Self::new(matrix)?;
        if !a.split.real_simple {
            return Err(Error::NotSimpleSpectrum);
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        lattice::to_f64(&self.matrix)
    }

    pub fn inverse_f64(&self) -> DMatrix<f64> {
        lattice::to_f64(&self.inverse)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        apply_int(&self.matrix, x)
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        apply_int(&self.inverse, x)
    }
}

fn apply_int(m: &IntMatrix, x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, v)| *a as f64 * v).sum()).collect()
}

/// Sorted eigenvalues and the real hyperbolic splitting of `A`.
pub fn eigen_split(matrix: &IntMatrix) -> Result<EigenSplit> {
    let d = matrix.len();
    let a = lattice::to_f64(matrix);
    let mut eigenvalues: Vec<Complex<f64>> = a.clone().complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.im.total_cmp(&y.im)));
    if let Some(b) = eigenvalues.iter().find(|b| (b.norm() - 1.0).abs() < HYPERBOLICITY_TOL) {
        return Err(Error::NotHyperbolic { modulus: b.norm() });
    }
    let n_stable = eigenvalues.iter().filter(|b| b.norm() < 1.0).count();
    let n_unstable = d - n_stable;

    let unstable_basis = dominant_subspace(&a, n_unstable);
    let ainv = a.clone().try_inverse().expect("unimodular matrix is invertible");
    let stable_basis = dominant_subspace(&ainv, n_stable);
    let mut basis = DMatrix::zeros(d, d);
    basis.columns_mut(0, n_unstable).copy_from(&unstable_basis);
    basis.columns_mut(n_unstable, n_stable).copy_from(&stable_basis);
    let basis_inv = basis.clone().try_inverse().expect("stable and unstable spaces are complementary");

    let real_simple = eigenvalues.iter().all(|b| b.im.abs() < 1e-12)
        && eigenvalues.windows(2).all(|w| (w[1].re - w[0].re).abs() > 1e-9 * (1.0 + w[0].re.abs()));
    let eigenvectors = real_simple.then(|| eigenvalues.iter().map(|b| null_vector(&a, b.re)).collect());
    let irreducible = !has_integer_factor(&eigenvalues);
    Ok(EigenSplit {
        eigenvalues,
        n_stable,
        n_unstable,
        stable_basis,
        unstable_basis,
        basis,
        basis_inv,
        eigenvectors,
        real_simple,
        irreducible,
    })
}

/// Orthonormal basis of the `m`-dimensional dominant invariant subspace, by
/// subspace iteration from a fixed generic frame.
fn dominant_subspace(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let d = a.nrows();
    let mut q = generic_frame(d, m);
    for _ in 0..2000 {
        let next = (a * &q).qr().q();
        let change = (&next - &q * (q.transpose() * &next)).amax();
        q = next;
        if change < 1e-15 {
            break;
        }
    }
    q
}

/// Deterministic frame in general position with respect to coordinate subspaces.
pub(crate) fn generic_frame(d: usize, m: usize) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(d, m, |i, j| ((i * 7 + j * 13 + 3) as f64 * 0.618_033_988_749_895).fract() + 0.1 * f64::from(u8::from(i == j)));
    raw.qr().q()
}

fn null_vector(a: &DMatrix<f64>, beta: f64) -> DVector<f64> {
    let d = a.nrows();
    let shifted = a - DMatrix::identity(d, d) * beta;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let idx = svd.singular_values.imin();
    let mut v: DVector<f64> = vt.row(idx).transpose();
    // fix the sign so the largest component is positive
    if v[v.iamax()] < 0.0 {
        v = -v;
    }
    v
}

/// True if some conjugation-closed subset of at most `d/2` eigenvalues has a
/// monic integer polynomial as its product `prod (t - b)`.
fn has_integer_factor(eigenvalues: &[Complex<f64>]) -> bool {
    let d = eigenvalues.len();
    if d > 12 {
        return false;
    }
    (1u32..(1 << d)).filter(|mask| mask.count_ones() as usize <= d / 2).any(|mask| {
        let mut poly = vec![Complex::new(1.0, 0.0)];
        for (i, b) in eigenvalues.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
                for (k, c) in poly.iter().enumerate() {
                    next[k + 1] += c;
                    next[k] -= c * b;
                }
                poly = next;
            }
        }
        poly.iter().all(|c| c.im.abs() < 1e-7 && (c.re - c.re.round()).abs() < 1e-7)
    })
}

/// One Fourier mode `a sin(2 pi k.x) + b cos(2 pi k.x)` in one component.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub component: usize,
    pub wave: Vec<i32>,
    pub a: f64,
    pub b: f64,
}

impl TrigMode {
    pub fn new(component: usize, wave: Vec<i32>, a: f64, b: f64) -> Self {
        Self { component, wave, a, b }
    }

    fn phase(&self, x: &[f64]) -> f64 {
        2.0 * PI * self.wave.iter().zip(x).map(|(k, v)| *k as f64 * v).sum::<f64>()
    }
}

/// `Z^d`-periodic vector field on `R^d` given by finitely many modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigField {
    pub dim: usize,
    pub modes: Vec<TrigMode>,
}

impl TrigField {
    pub fn new(dim: usize, modes: Vec<TrigMode>) -> Result<Self> {
        for m in &modes {
            if m.component >= dim || m.wave.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "mode {m:?} does not fit dimension {dim}"
                )));
            }
        }
        Ok(Self { dim, modes })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, modes: Vec::new() }
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for m in &self.modes {
            let (s, c) = m.phase(x).sin_cos();
            out[m.component] += m.a * s + m.b * c;
        }
        out
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        for m in &self.modes {
            let (s, c) = m.phase(x).sin_cos();
            let g = 2.0 * PI * (m.a * c - m.b * s);
            for (j, k) in m.wave.iter().enumerate() {
                out[(m.component, j)] += g * *k as f64;
            }
        }
        out
    }

    /// Upper bound on `sup |p|` per component, summed.
    pub fn amplitude_bound(&self) -> f64 {
        self.modes.iter().map(|m| m.a.hypot(m.b)).sum()
    }

    /// Upper bound on the Frobenius norm of `Dp`.
    pub fn slope_bound(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| 2.0 * PI * m.a.hypot(m.b) * m.wave.iter().map(|k| (*k as f64).powi(2)).sum::<f64>().sqrt())
            .sum()
    }

    fn max_wave(&self) -> i32 {
        self.modes.iter().flat_map(|m| m.wave.iter().map(|k| k.abs())).max().unwrap_or(0)
    }

    fn scale(&self) -> f64 {
        match self.max_wave() {
            0 => f64::INFINITY,
            k => 1.0 / (8.0 * k as f64),
        }
    }
}

/// A diffeomorphism of `T^d` homotopic to `A`, given by its lift.
pub trait TorusMap: Send + Sync {
    fn linear(&self) -> &IntAutomorphism;

    fn dim(&self) -> usize {
        self.linear().dim()
    }

    fn lift(&self, x: &[f64]) -> Vec<f64>;

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;

    /// Length below which the map is indistinguishable from its derivative;
    /// infinite for affine maps.
    fn resolution_scale(&self) -> f64 {
        f64::INFINITY
    }

    /// The lift preimage `x` with `F(x) = y`, by Newton from `A^{-1} y`.
    fn inverse_lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        newton_inverse(|x| self.lift(x), |x| self.jacobian(x), self.linear().apply_inverse(y), y)
    }

    fn eval_torus(&self, x: &[f64]) -> Vec<f64> {
        reduce(&self.lift(x))
    }

    fn inverse_torus(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(reduce(&self.inverse_lift(y)?))
    }
}

/// Coordinates mod 1 in `[0, 1)`.
pub fn reduce(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.rem_euclid(1.0) % 1.0).collect()
}

pub(crate) fn newton_inverse<F, J>(f: F, jac: J, mut x: Vec<f64>, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    for _ in 0..50 {
        let r = DVector::from_iterator(y.len(), f(&x).iter().zip(y).map(|(a, b)| a - b));
        let step = match jac(&x).lu().solve(&r) {
            Some(s) => s,
            None => break,
        };
        for (xi, si) in x.iter_mut().zip(step.iter()) {
            *xi -= si;
        }
        let size = step.amax();
        if !size.is_finite() {
            break;
        }
        if size < 1e-14 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            return Ok(x);
        }
    }
    Err(Error::InversionFailure { point: y.to_vec() })
}

/// `f(x) = A x + epsilon p(x)`.
#[derive(Debug, Clone)]
pub struct ToralMap {
    pub linear: IntAutomorphism,
    pub field: TrigField,
    pub epsilon: f64,
}

impl ToralMap {
    pub fn new(linear: IntAutomorphism, field: TrigField, epsilon: f64) -> Result<Self> {
        if field.dim != linear.dim() {
            return Err(Error::InvalidArgument("perturbation dimension differs from the matrix".into()));
        }
        Ok(Self { linear, field, epsilon })
    }

    pub fn unperturbed(linear: IntAutomorphism) -> Self {
        let d = linear.dim();
        Self { linear, field: TrigField::zero(d), epsilon: 0.0 }
    }
}

impl TorusMap for ToralMap {
    fn linear(&self) -> &IntAutomorphism {
        &self.linear
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.linear.apply(x);
        if self.epsilon != 0.0 {
            for (yi, pi) in y.iter_mut().zip(self.field.value(x)) {
                *yi += self.epsilon * pi;
            }
        }
        y
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let a = self.linear.to_f64();
        if self.epsilon == 0.0 {
            a
        } else {
            a + self.field.jacobian(x) * self.epsilon
        }
    }

    fn resolution_scale(&self) -> f64 {
        if self.epsilon == 0.0 {
            f64::INFINITY
        } else {
            self.field.scale()
        }
    }
}

/// `H(x) = x + q(x)`, a diffeomorphism isotopic to the identity when `|Dq| < 1`.
#[derive(Debug, Clone)]
pub struct TorusDiffeo {
    pub field: TrigField,
}

impl TorusDiffeo {
    pub fn new(field: TrigField) -> Result<Self> {
        if field.slope_bound() >= 1.0 {
            return Err(Error::NotDiffeomorphism { min_derivative: 1.0 - field.slope_bound() });
        }
        Ok(Self { field })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.field.value(x)).map(|(a, b)| a + b).collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(x.len(), x.len()) + self.field.jacobian(x)
    }

    pub fn inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let seed: Vec<f64> = y.iter().zip(self.field.value(y)).map(|(a, b)| a - b).collect();
        newton_inverse(|x| self.eval(x), |x| self.jacobian(x), seed, y)
    }
}

/// `g = H o A o H^{-1}`: nonlinear, with the periodic data of `A`.
#[derive(Debug, Clone)]
pub struct ConjugateToral {
    pub linear: IntAutomorphism,
    pub h: TorusDiffeo,
}

impl ConjugateToral {
    pub fn new(linear: IntAutomorphism, h: TorusDiffeo) -> Result<Self> {
        if h.field.dim != linear.dim() {
            return Err(Error::InvalidArgument("conjugating diffeo dimension differs from the matrix".into()));
        }
        Ok(Self { linear, h })
    }

    fn pull(&self, x: &[f64]) -> Vec<f64> {
        self.h.inverse(x).expect("conjugating diffeo is invertible")
    }
}

impl TorusMap for ConjugateToral {
    fn linear(&self) -> &IntAutomorphism {
        &self.linear
    }

    fn lift(&self, x: &[f64]) -> Vec<f64> {
        self.h.eval(&self.linear.apply(&self.pull(x)))
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let y = self.pull(x);
        let z = self.linear.apply(&y);
        let inner = self.h.jacobian(&y).try_inverse().expect("conjugating diffeo is invertible");
        self.h.jacobian(&z) * self.linear.to_f64() * inner
    }

    fn resolution_scale(&self) -> f64 {
        self.h.field.scale()
    }

    fn inverse_lift(&self, y: &[f64]) -> Result<Vec<f64>> {
        let w = self.h.inverse(y)?;
        Ok(self.h.eval(&self.linear.apply_inverse(&w)))
    }
}

/// Largest singular value.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.singular_values().max()
    }
}

/// Smallest singular value.
pub(crate) fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        f64::INFINITY
    } else {
        m.singular_values().min()
    }
}

/// Cone data at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSample {
    pub point: Vec<f64>,
    /// Worst of the unstable expansion and stable contraction factors, minus one.
    pub margin: f64,
    /// Strict-invariance slack; positive means the cones are mapped inside themselves.
    pub invariance_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeReport {
    pub grid_n: usize,
    pub samples: Vec<ConeSample>,
    pub margin: f64,
    pub invariance_slack: f64,
}

impl ConeReport {
    pub fn ok(&self) -> bool {
        self.margin > 0.0 && self.invariance_slack > 0.0
    }

    /// The report, or `ConeViolation` at the worst sample.
    pub fn require(self) -> Result<Self> {
        if self.ok() {
            return Ok(self);
        }
        let worst = self
            .samples
            .iter()
            .min_by(|a, b| a.margin.min(a.invariance_slack).total_cmp(&b.margin.min(b.invariance_slack)))
            .expect("nonempty grid");
        Err(Error::ConeViolation { point: worst.point.clone(), margin: worst.margin.min(worst.invariance_slack) })
    }
}

/// Expansion factors and invariance slack of the eigenbasis cones under a
/// derivative `m` at one point.
fn cone_sample(split: &EigenSplit, jac: &DMatrix<f64>, jac_inv: &DMatrix<f64>) -> (f64, f64) {
    let (n, k) = (split.n_unstable, split.n_stable);
    let g = CONE_OPENING;
    let c = &split.basis_inv * jac * &split.basis;
    let e_u = sigma_min(&c.view((0, 0), (n, n)).into_owned()) - g * spectral_norm(&c.view((0, n), (n, k)).into_owned());
    let leak_u = spectral_norm(&c.view((n, 0), (k, n)).into_owned()) + g * spectral_norm(&c.view((n, n), (k, k)).into_owned());
    let ci = &split.basis_inv * jac_inv * &split.basis;
    let e_s = sigma_min(&ci.view((n, n), (k, k)).into_owned()) - g * spectral_norm(&ci.view((n, 0), (k, n)).into_owned());
    let leak_s = spectral_norm(&ci.view((0, n), (n, k)).into_owned()) + g * spectral_norm(&ci.view((0, 0), (n, n)).into_owned());
    let margin = e_u.min(e_s) - 1.0;
    let slack = (g * e_u - leak_u).min(g * e_s - leak_s);
    (margin, slack)
}

/// Checks the eigenbasis cones of `A` against `Df` and `Df^{-1}` on the
/// uniform `grid_n^d` grid.
pub fn cone_certify<M: TorusMap + ?Sized>(map: &M, grid_n: usize) -> ConeReport {
    let d = map.dim();
    let split = &map.linear().split;
    let total = grid_n.pow(d as u32);
    let samples: Vec<ConeSample> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let point = grid_point(idx, grid_n, d);
            let jac = map.jacobian(&point);
            let (margin, invariance_slack) = match jac.clone().try_inverse() {
                Some(inv) => cone_sample(split, &jac, &inv),
                None => (-1.0, f64::NEG_INFINITY),
            };
            ConeSample { point, margin, invariance_slack }
        })
        .collect();
    let margin = samples.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    let invariance_slack = samples.iter().map(|s| s.invariance_slack).fold(f64::INFINITY, f64::min);
    ConeReport { grid_n, samples, margin, invariance_slack }
}

/// Point `idx` of the uniform grid, first coordinate slowest.
pub fn grid_point(mut idx: usize, n: usize, d: usize) -> Vec<f64> {
    let mut p = vec![0.0; d];
    for i in (0..d).rev() {
        p[i] = (idx % n) as f64 / n as f64;
        idx /= n;
    }
    p
}
