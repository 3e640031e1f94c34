//! Pointwise estimates of the invariant flags by frame transport.
//!
//! Exponents are indexed `0..d` in increasing order, so the stable directions
//! come first and `E^u_1` (index `k`) is the weakest unstable direction. The
//! span of exponents `[a, b)` is the intersection of the `b`-dimensional slow
//! space, obtained by pushing frames backward with `Df^{-1}`, with the
//! `(d - a)`-dimensional fast space, obtained by pushing frames forward.

use nalgebra::DMatrix;

use super::dynamics::{generic_frame, reduce, TorusMap};
use crate::error::{Error, Result};

/// Largest accepted change between the last two transported frames.
pub const FRAME_TOL: f64 = 1e-8;
pub const DEFAULT_FRAME_ITERS: usize = 60;

/// `[x_{-m}, ..., x_0]`, reduced mod 1.
pub fn backward_orbit<M: TorusMap + ?Sized>(map: &M, x: &[f64], m: usize) -> Result<Vec<Vec<f64>>> {
    let mut orbit = vec![reduce(x)];
    for _ in 0..m {
        let prev = map.inverse_torus(orbit.last().expect("nonempty"))?;
        orbit.push(prev);
    }
    orbit.reverse();
    Ok(orbit)
}

/// `[x_0, ..., x_m]`, reduced mod 1.
pub fn forward_orbit<M: TorusMap + ?Sized>(map: &M, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let mut orbit = vec![reduce(x)];
    for _ in 0..m {
        let next = map.eval_torus(orbit.last().expect("nonempty"));
        orbit.push(next);
    }
    orbit
}

/// Orthonormal `Q` and `ln |det R|` of `Q R = m`.
pub fn orthonormalize(m: DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let qr = m.qr();
    let log_det = qr.r().diagonal().iter().map(|r| r.abs().ln()).sum();
    (qr.q(), log_det)
}

/// `max |(I - P_a) b|` for orthonormal frames; zero iff `span b` lies in `span a`.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (b - a * (a.transpose() * b)).amax()
}

/// Orthonormal basis of the `r`-dimensional intersection of `span u` and `span w`.
pub fn subspace_intersection(u: &DMatrix<f64>, w: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    if w.ncols() == w.nrows() {
        return u.columns(0, r).into_owned();
    }
    if u.ncols() == u.nrows() {
        return w.columns(0, r).into_owned();
    }
    let residual = u - w * (w.transpose() * u);
    let svd = residual.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let mut coeffs = DMatrix::zeros(u.ncols(), r);
    for (col, &idx) in order.iter().take(r).enumerate() {
        coeffs.set_column(col, &vt.row(idx).transpose());
    }
    orthonormalize(u * coeffs).0
}

/// Pushes `frame` forward along `orbit`, returning the frame at every point.
fn push_forward<M: TorusMap + ?Sized>(map: &M, orbit: &[Vec<f64>], frame: DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let mut frames = Vec::with_capacity(orbit.len());
    frames.push(frame);
    for p in &orbit[..orbit.len() - 1] {
        let next = orthonormalize(map.jacobian(p) * frames.last().expect("nonempty")).0;
        frames.push(next);
    }
    frames
}

/// Pushes `frame` backward along `orbit` from its last point; frames are
/// returned in orbit order.
fn push_backward<M: TorusMap + ?Sized>(map: &M, orbit: &[Vec<f64>], frame: DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let mut frames = vec![frame];
    for p in orbit[..orbit.len() - 1].iter().rev() {
        let inv = map.jacobian(p).try_inverse().ok_or_else(|| Error::InversionFailure { point: p.clone() })?;
        let next = orthonormalize(inv * frames.last().expect("nonempty")).0;
        frames.push(next);
    }
    frames.reverse();
    Ok(frames)
}

fn converged(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &'static str, n_iter: usize) -> Result<()> {
    let residual = subspace_distance(a, b);
    if residual > FRAME_TOL {
        return Err(Error::NoConvergence { what, iterations: n_iter, residual });
    }
    Ok(())
}

/// The `m` fastest directions at `x`.
pub fn fast_frame<M: TorusMap + ?Sized>(map: &M, x: &[f64], m: usize, n_iter: usize) -> Result<DMatrix<f64>> {
    let d = map.dim();
    if m == d {
        return Ok(DMatrix::identity(d, d));
    }
    let orbit = backward_orbit(map, x, n_iter)?;
    let start = generic_frame(d, m);
    let full = push_forward(map, &orbit, start.clone());
    let short = push_forward(map, &orbit[1..], start);
    let (a, b) = (full.last().expect("nonempty"), short.last().expect("nonempty"));
    converged(a, b, "fast frame", n_iter)?;
    Ok(a.clone())
}

/// The `m` slowest directions at `x`.
pub fn slow_frame<M: TorusMap + ?Sized>(map: &M, x: &[f64], m: usize, n_iter: usize) -> Result<DMatrix<f64>> {
    let d = map.dim();
    if m == d {
        return Ok(DMatrix::identity(d, d));
    }
    let orbit = forward_orbit(map, x, n_iter);
    let start = generic_frame(d, m);
    let full = push_backward(map, &orbit, start.clone())?;
    let short = push_backward(map, &orbit[..n_iter], start)?;
    converged(&full[0], &short[0], "slow frame", n_iter)?;
    Ok(full[0].clone())
}

/// Span of the Oseledets directions with exponent indices in `[lo, hi)`.
pub fn bundle_frame<M: TorusMap + ?Sized>(map: &M, x: &[f64], lo: usize, hi: usize, n_iter: usize) -> Result<DMatrix<f64>> {
    let d = map.dim();
    if lo >= hi || hi > d {
        return Err(Error::InvalidArgument(format!("bundle range [{lo}, {hi}) in dimension {d}")));
    }
    let slow = slow_frame(map, x, hi, n_iter)?;
    let fast = fast_frame(map, x, d - lo, n_iter)?;
    Ok(subspace_intersection(&slow, &fast, hi - lo))
}

/// Orthonormal frame of the weak unstable flag `E^u_{(1,i)} = E^u_1 + ... + E^u_i`.
pub fn bundle_estimate<M: TorusMap + ?Sized>(map: &M, x: &[f64], i: usize, n_iter: usize) -> Result<DMatrix<f64>> {
    let split = &map.linear().split;
    if i == 0 || i > split.n_unstable {
        return Err(Error::InvalidArgument(format!("flag index {i} outside 1..={}", split.n_unstable)));
    }
    let k = split.n_stable;
    bundle_frame(map, x, k, k + i, n_iter)
}

/// `max |(I - P) Df(x) F|` for frames `F` at `x` and `P` at `f(x)`, after
/// normalizing the image.
pub fn invariance_defect<M: TorusMap + ?Sized>(map: &M, x: &[f64], frame: &DMatrix<f64>, image_frame: &DMatrix<f64>) -> f64 {
    let image = orthonormalize(map.jacobian(x) * frame).0;
    subspace_distance(image_frame, &image)
}

/// The orbit `x_0..x_n` with the flag `E^u_{(1,i)}` estimated at every point
/// by one forward and one backward sweep.
pub fn flag_frames_along_orbit<M: TorusMap + ?Sized>(
    map: &M,
    x: &[f64],
    i: usize,
    n: usize,
    n_iter: usize,
) -> Result<(Vec<Vec<f64>>, Vec<DMatrix<f64>>)> {
    let split = &map.linear().split;
    let (k, nu) = (split.n_stable, split.n_unstable);
    if i == 0 || i > nu {
        return Err(Error::InvalidArgument(format!("flag index {i} outside 1..={nu}")));
    }
    let d = map.dim();
    let past = backward_orbit(map, x, n_iter)?;
    let mut future = forward_orbit(map, x, n + n_iter);
    let fast = push_forward(map, &[past.as_slice(), &future[1..=n]].concat(), generic_frame(d, nu));
    let fast = &fast[n_iter..];
    let frames = if k + i == d {
        fast.to_vec()
    } else {
        let slow = push_backward(map, &future, generic_frame(d, k + i))?;
        (0..=n).map(|m| subspace_intersection(&slow[m], &fast[m], i)).collect()
    };
    future.truncate(n + 1);
    Ok((future, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::dynamics::{IntAutomorphism, ToralMap, TrigField, TrigMode};

    fn map(eps: f64) -> ToralMap {
        let a = IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap();
        let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)]).unwrap();
        ToralMap::new(a, p, eps).unwrap()
    }

    fn map3(eps: f64) -> ToralMap {
        let a = IntAutomorphism::with_simple_spectrum(vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 1]]).unwrap();
        let p = TrigField::new(
            3,
            vec![TrigMode::new(0, vec![0, 1, 0], 0.3, 0.0), TrigMode::new(1, vec![0, 0, 1], 0.2, 0.1), TrigMode::new(2, vec![1, 0, 0], 0.25, 0.0)],
        )
        .unwrap();
        ToralMap::new(a, p, eps).unwrap()
    }

    #[test]
    fn linear_frames_are_eigenspaces() {
        let f = map(0.0);
        let u = &f.linear.split.unstable_basis;
        let e = bundle_estimate(&f, &[0.3, 0.1], 1, 40).unwrap();
        assert!(subspace_distance(u, &e) < 1e-12);
        let s = &f.linear.split.stable_basis;
        assert!(subspace_distance(s, &slow_frame(&f, &[0.3, 0.1], 1, 40).unwrap()) < 1e-12);
    }

    #[test]
    fn three_dimensional_linear_flags() {
        let f = map3(0.0);
        let vecs = f.linear.split.eigenvectors.clone().unwrap();
        let weak = bundle_estimate(&f, &[0.1, 0.2, 0.3], 1, 120).unwrap();
        let v = DMatrix::from_column_slice(3, 1, vecs[1].as_slice());
        assert!(subspace_distance(&weak, &v) < 1e-8);
        let full = bundle_estimate(&f, &[0.1, 0.2, 0.3], 2, 120).unwrap();
        assert!(subspace_distance(&f.linear.split.unstable_basis, &full) < 1e-10);
    }

    #[test]
    fn perturbed_flag_is_invariant() {
        let f = map(0.05);
        let x = [0.37, 0.61];
        let e = bundle_estimate(&f, &x, 1, 80).unwrap();
        let e_fx = bundle_estimate(&f, &f.eval_torus(&x), 1, 80).unwrap();
        assert!(invariance_defect(&f, &x, &e, &e_fx) < 1e-8);
    }

    #[test]
    fn weak_flag_in_three_dimensions_is_invariant_and_dominated() {
        let f = map3(0.03);
        let x = [0.11, 0.52, 0.87];
        let (orbit, frames) = flag_frames_along_orbit(&f, &x, 1, 10, 80).unwrap();
        for m in 0..10 {
            assert!(invariance_defect(&f, &orbit[m], &frames[m], &frames[m + 1]) < 1e-8);
        }
        let direct = bundle_estimate(&f, &x, 1, 80).unwrap();
        assert!(subspace_distance(&direct, &frames[0]) < 1e-8);
        // growth on the weak direction stays below growth on the strong one
        let strong = bundle_frame(&f, &x, 2, 3, 80).unwrap();
        let weak_growth = (f.jacobian(&x) * &frames[0]).norm();
        let strong_growth = (f.jacobian(&x) * &strong).norm();
        assert!(weak_growth < strong_growth);
    }

    #[test]
    fn too_few_iterations_is_reported() {
        let f = map3(0.03);
        assert!(matches!(bundle_estimate(&f, &[0.1, 0.2, 0.3], 1, 3), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn intersection_of_planes() {
        let u = orthonormalize(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])).0;
        let w = orthonormalize(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0])).0;
        let line = subspace_intersection(&u, &w, 1);
        let expected = DMatrix::from_column_slice(3, 1, &[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0]);
        assert!(subspace_distance(&line, &expected) < 1e-14);
    }
}
