//! The Franks conjugacy `h = id + u` with `h o f = A o h`, computed by
//! hyperbolic contraction on a uniform grid.
//!
//! In eigencoordinates `c = B^{-1} u` the equation `A u - u o f = psi`, with
//! `psi = f - A`, splits into
//!
//! ```text
//! c_u(x) = M_u^{-1} [c_u(f x) + psi_u(x)]
//! c_s(x) = M_s c_s(f^{-1} x) - psi_s(f^{-1} x)
//! ```
//!
//! and both right-hand sides are contractions.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::dynamics::{grid_point, reduce, TorusMap};
use super::periodic::ToralPeriodicOrbit;
use crate::error::{Error, Result};
use crate::numerics::{circle_distance, linear_fit, torus_distance};

/// Sweeps stop once successive iterates differ by less than this.
pub const SWEEP_TOL: f64 = 1e-10;
pub const DEFAULT_SWEEPS: usize = 200;

/// `R^d`-valued `Z^d`-periodic field sampled on the `N^d` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub n: usize,
    pub dim: usize,
    /// Row-major over grid points (first coordinate slowest), `dim` values each.
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { n, dim, values: vec![0.0; n.pow(dim as u32) * dim] }
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Multilinear interpolation, written into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let n = self.n;
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        for i in 0..d {
            let s = x[i].rem_euclid(1.0) * n as f64;
            let j = s.floor();
            base[i] = (j as usize) % n;
            frac[i] = s - j;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            for i in 0..d {
                let bit = (corner >> (d - 1 - i)) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                idx = idx * n + (base[i] + bit) % n;
            }
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(self.at(idx)) {
                    *o += w * v;
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h(x) = x + u(x)` as a lift.
    pub fn conjugacy(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.eval(x)).map(|(a, b)| a + b).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FranksSolution {
    /// The displacement `u`.
    pub field: GridField,
    /// Sup-difference between successive sweeps.
    pub differences: Vec<f64>,
    /// `max(|M_u^{-1}|, |M_s|)`.
    pub contraction: f64,
}

/// Per grid point: `f(x)`, `f^{-1}(x)` reduced, and `psi` terms in eigencoordinates.
struct Precomputed {
    forward: Vec<Vec<f64>>,
    backward: Vec<Vec<f64>>,
    psi_u: Vec<DVector<f64>>,
    psi_s: Vec<DVector<f64>>,
}

fn precompute<M: TorusMap + ?Sized>(map: &M, n: usize) -> Result<Precomputed> {
    let d = map.dim();
    let split = &map.linear().split;
    let (nu, ns) = (split.n_unstable, split.n_stable);
    let binv = &split.basis_inv;
    let rows: Vec<(Vec<f64>, Vec<f64>, DVector<f64>, DVector<f64>)> = (0..n.pow(d as u32))
        .into_par_iter()
        .map(|idx| {
            let x = grid_point(idx, n, d);
            let fx = map.lift(&x);
            let ax = map.linear().apply(&x);
            let psi = binv * DVector::from_iterator(d, fx.iter().zip(&ax).map(|(a, b)| a - b));
            let back = map.inverse_lift(&x)?;
            let aback = map.linear().apply(&back);
            let psi_back = binv * DVector::from_iterator(d, x.iter().zip(&aback).map(|(a, b)| a - b));
            Ok((reduce(&fx), reduce(&back), psi.rows(0, nu).into_owned(), psi_back.rows(nu, ns).into_owned()))
        })
        .collect::<Result<_>>()?;
    let mut pre = Precomputed { forward: vec![], backward: vec![], psi_u: vec![], psi_s: vec![] };
    for (f, b, pu, ps) in rows {
        pre.forward.push(f);
        pre.backward.push(b);
        pre.psi_u.push(pu);
        pre.psi_s.push(ps);
    }
    Ok(pre)
}

/// Jacobi iteration for `u` on the `n^d` grid, at most `max_sweeps` sweeps.
pub fn franks_solve<M: TorusMap + ?Sized>(map: &M, n: usize, max_sweeps: usize) -> Result<FranksSolution> {
    let d = map.dim();
    if d > 8 || n < 2 {
        return Err(Error::InvalidArgument(format!("grid {n}^{d} not supported")));
    }
    let split = &map.linear().split;
    let (nu, ns) = (split.n_unstable, split.n_stable);
    let m = &split.basis_inv * map.linear().to_f64() * &split.basis;
    let mu_inv = m.view((0, 0), (nu, nu)).into_owned().try_inverse().expect("unstable block is invertible");
    let ms: DMatrix<f64> = m.view((nu, nu), (ns, ns)).into_owned();
    let contraction = super::dynamics::spectral_norm(&mu_inv).max(super::dynamics::spectral_norm(&ms));
    let pre = precompute(map, n)?;

    let mut coords = GridField::zeros(n, d);
    let mut differences = Vec::new();
    for _ in 0..max_sweeps {
        let mut next = GridField::zeros(n, d);
        next.values.par_chunks_mut(d).enumerate().for_each(|(idx, out)| {
            let mut at = vec![0.0; d];
            coords.eval_into(&pre.forward[idx], &mut at);
            let cu = &mu_inv * (DVector::from_column_slice(&at[..nu]) + &pre.psi_u[idx]);
            coords.eval_into(&pre.backward[idx], &mut at);
            let cs = &ms * DVector::from_column_slice(&at[nu..]) - &pre.psi_s[idx];
            out[..nu].copy_from_slice(cu.as_slice());
            out[nu..].copy_from_slice(cs.as_slice());
        });
        let diff = next.values.iter().zip(&coords.values).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        differences.push(diff);
        coords = next;
        if diff < SWEEP_TOL {
            let field = to_displacement(&coords, &split.basis);
            return Ok(FranksSolution { field, differences, contraction });
        }
    }
    Err(Error::NoConvergence {
        what: "franks_solve",
        iterations: max_sweeps,
        residual: differences.last().copied().unwrap_or(f64::INFINITY),
    })
}

fn to_displacement(coords: &GridField, basis: &DMatrix<f64>) -> GridField {
    let d = coords.dim;
    let mut field = GridField::zeros(coords.n, d);
    field.values.par_chunks_mut(d).enumerate().for_each(|(idx, out)| {
        let u = basis * DVector::from_column_slice(coords.at(idx));
        out.copy_from_slice(u.as_slice());
    });
    field
}

/// `sup |A(x + u(x)) - f(x) - u(f(x))|` mod `Z^d` over the `test_n^d` grid.
pub fn conjugacy_residual<M: TorusMap + ?Sized>(map: &M, field: &GridField, test_n: usize) -> f64 {
    let d = map.dim();
    let per_point: Vec<f64> = (0..test_n.pow(d as u32))
        .into_par_iter()
        .map(|idx| {
            let x = grid_point(idx, test_n, d);
            let lhs = map.linear().apply(&field.conjugacy(&x));
            let fx = map.lift(&x);
            let rhs = field.conjugacy(&fx);
            lhs.iter().zip(&rhs).map(|(a, b)| circle_distance(*a, *b)).fold(0.0, f64::max)
        })
        .collect();
    per_point.into_iter().fold(0.0, f64::max)
}

/// `max dist(h(p), q)` over continued orbits, `q` the lattice seed of `p`.
pub fn periodic_equivariance(field: &GridField, orbits: &[ToralPeriodicOrbit]) -> f64 {
    orbits.iter().map(|o| torus_distance(&field.conjugacy(&o.point), &o.seed)).fold(0.0, f64::max)
}

/// True when no two grid images under `h` are within `1/(4N)` in the sup metric.
pub fn grid_injective(field: &GridField) -> bool {
    let (n, d) = (field.n, field.dim);
    let cell = 1.0 / (4.0 * n as f64);
    let cells_per_axis = 4 * n as i64;
    let images: Vec<Vec<f64>> = (0..field.points()).map(|idx| reduce(&field.conjugacy(&grid_point(idx, n, d)))).collect();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| ((v / cell).floor() as i64).rem_euclid(cells_per_axis)).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in images.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut c| {
            (0..d)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .collect();
    images.iter().enumerate().all(|(i, p)| {
        let k = key(p);
        offsets.iter().all(|off| {
            let neighbour: Vec<i64> = k.iter().zip(off).map(|(a, b)| (a + b).rem_euclid(cells_per_axis)).collect();
            buckets
                .get(&neighbour)
                .is_none_or(|list| list.iter().all(|&j| j == i || torus_distance(p, &images[j]) >= cell))
        })
    })
}

/// Hölder exponent of `h` along one eigendirection of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalHolder {
    /// `"u1"`, `"s1"`, ...; sides follow the basis order of the splitting.
    pub direction: String,
    pub alpha: f64,
    pub r2: f64,
    /// `(m, oscillation)` for scales `2^{-m}`.
    pub rows: Vec<(usize, f64)>,
}

pub const HOLDER_LINES: usize = 8;

/// Oscillation regression of `h` restricted to unit segments along each
/// column of the eigenbasis, at dyadic scales from `1/4` down to the grid spacing.
pub fn toral_holder_estimate<M: TorusMap + ?Sized>(map: &M, field: &GridField) -> Vec<DirectionalHolder> {
    let split = &map.linear().split;
    let d = field.dim;
    let levels = (field.n as f64).log2().ceil() as usize;
    let samples = 1usize << levels;
    let bases: Vec<Vec<f64>> = (0..HOLDER_LINES)
        .map(|l| (0..d).map(|i| ((l * (2 * i + 3) + i) as f64 * 0.381_966_011_250_105).fract()).collect())
        .collect();
    (0..d)
        .map(|col| {
            let v: Vec<f64> = split.basis.column(col).iter().copied().collect();
            let direction = if col < split.n_unstable {
                format!("u{}", col + 1)
            } else {
                format!("s{}", col - split.n_unstable + 1)
            };
            let lines: Vec<Vec<Vec<f64>>> = bases
                .par_iter()
                .map(|x0| {
                    (0..=samples)
                        .map(|j| {
                            let t = j as f64 / samples as f64;
                            let x: Vec<f64> = x0.iter().zip(&v).map(|(a, b)| a + t * b).collect();
                            field.conjugacy(&x)
                        })
                        .collect()
                })
                .collect();
            let rows: Vec<(usize, f64)> = (2..=levels)
                .map(|m| {
                    let stride = samples >> m;
                    let osc = lines
                        .iter()
                        .flat_map(|line| {
                            (0..samples / stride).map(move |b| {
                                let (p, q) = (&line[b * stride], &line[(b + 1) * stride]);
                                p.iter().zip(q).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max)
                            })
                        })
                        .fold(0.0, f64::max);
                    (m, osc)
                })
                .collect();
            let xs: Vec<f64> = rows.iter().map(|(m, _)| -(*m as f64) * std::f64::consts::LN_2).collect();
            let ys: Vec<f64> = rows.iter().map(|(_, o)| o.ln()).collect();
            let fit = linear_fit(&xs, &ys);
            DirectionalHolder { direction, alpha: fit.slope, r2: fit.r2, rows }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::dynamics::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TrigField, TrigMode};
    use crate::torus::periodic::continue_orbits;

    fn cat() -> IntAutomorphism {
        IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
    }

    fn perturbed(eps: f64) -> ToralMap {
        let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)]).unwrap();
        ToralMap::new(cat(), p, eps).unwrap()
    }

    fn h_field() -> TorusDiffeo {
        let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)]).unwrap();
        TorusDiffeo::new(q).unwrap()
    }

    #[test]
    fn interpolation_reproduces_affine_data_and_wraps() {
        let mut g = GridField::zeros(4, 2);
        for idx in 0..16 {
            let p = grid_point(idx, 4, 2);
            g.values[2 * idx] = p[0];
            g.values[2 * idx + 1] = 1.0;
        }
        assert!((g.eval(&[0.3, 0.6])[0] - 0.3).abs() < 1e-15);
        assert!((g.eval(&[1.3, -0.4])[0] - 0.3).abs() < 1e-15);
        assert!((g.eval(&[0.1, 0.9])[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_perturbation_gives_zero_field() {
        let f = ToralMap::unperturbed(cat());
        let sol = franks_solve(&f, 16, 50).unwrap();
        assert_eq!(sol.field.sup_norm(), 0.0);
        let holder = toral_holder_estimate(&f, &sol.field);
        assert!(holder.iter().all(|h| (h.alpha - 1.0).abs() < 1e-12));
        assert!(grid_injective(&sol.field));
    }

    #[test]
    fn recovers_inverse_of_conjugating_diffeo() {
        let h = h_field();
        let g = ConjugateToral::new(cat(), h.clone()).unwrap();
        let sol = franks_solve(&g, 128, DEFAULT_SWEEPS).unwrap();
        let mut worst: f64 = 0.0;
        for idx in 0..37 * 37 {
            let x = grid_point(idx, 37, 2);
            worst = worst.max(torus_distance(&sol.field.conjugacy(&x), &h.inverse(&x).unwrap()));
        }
        assert!(worst < 1e-3, "{worst}");
        assert!(conjugacy_residual(&g, &sol.field, 97) < 1e-3);
        // contraction after the first sweeps
        for w in sol.differences.windows(2).skip(3) {
            if w[0] > 1e-13 {
                assert!(w[1] <= (sol.contraction + 0.05) * w[0]);
            }
        }
        let orbits = continue_orbits(&g, 3).unwrap();
        assert!(periodic_equivariance(&sol.field, &orbits) < 1e-3);
        assert!(grid_injective(&sol.field));
        let holder = toral_holder_estimate(&g, &sol.field);
        assert!(holder.iter().all(|h| h.alpha >= 0.95), "{holder:?}");
    }

    #[test]
    fn generic_map_field_is_order_epsilon() {
        let f = perturbed(0.05);
        let sol = franks_solve(&f, 64, DEFAULT_SWEEPS).unwrap();
        assert!(sol.field.sup_norm() < 5.0 * 0.05);
        assert!(sol.field.sup_norm() > 1e-3);
    }

    #[test]
    fn sweep_budget_is_reported() {
        let f = perturbed(0.05);
        assert!(matches!(franks_solve(&f, 16, 3), Err(Error::NoConvergence { .. })));
    }
}
