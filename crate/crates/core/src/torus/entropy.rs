//! Growth of unstable leaves and of the flag determinant cocycle.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dynamics::{grid_point, TorusMap};
use super::frames::{bundle_estimate, flag_frames_along_orbit, orthonormalize, DEFAULT_FRAME_ITERS};
use crate::error::{Error, Result};

/// Relative sagitta above which a polyline chord is split.
pub const SAGITTA_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_POINTS: usize = 2_000_000;
/// Final leaf length aimed at by [`default_delta`].
pub const TARGET_LENGTH: f64 = 10.0;
const MAX_DEPTH: u32 = 48;

/// Per-step log-growth of a leaf segment or a flag volume along an orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthEstimate {
    /// Flag index `i` of `E^u_{(1,i)}`.
    pub index: usize,
    pub base: Vec<f64>,
    /// Initial segment length; zero for the cocycle estimate.
    pub delta: f64,
    /// `g_1..g_n`.
    pub steps: Vec<f64>,
    /// `(1/n) sum g_m`.
    pub chi: f64,
}

impl GrowthEstimate {
    fn new(index: usize, base: Vec<f64>, delta: f64, steps: Vec<f64>) -> Self {
        let chi = steps.iter().sum::<f64>() / steps.len().max(1) as f64;
        Self { index, base, delta, steps, chi }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Running averages `chi_m = (1/m) sum_{j<=m} g_j`.
    pub fn running_chi(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.steps
            .iter()
            .enumerate()
            .map(|(m, g)| {
                acc += g;
                acc / (m + 1) as f64
            })
            .collect()
    }
}

/// Segment length that reaches about [`TARGET_LENGTH`] after `n` steps at growth rate `h`.
pub fn default_delta(h: f64, n: usize) -> f64 {
    (TARGET_LENGTH * (-h * n as f64).exp()).min(1e-3)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn polyline_length(points: &[Vec<f64>]) -> f64 {
    points.windows(2).map(|w| norm(&diff(&w[1], &w[0]))).sum()
}

struct Refiner<'a, M: ?Sized> {
    map: &'a M,
    scale: f64,
    max_points: usize,
    out: Vec<Vec<f64>>,
}

impl<M: TorusMap + ?Sized> Refiner<'_, M> {
    /// Appends the image of the chord `[p, q]` after its start point.
    fn chord(&mut self, p: &[f64], q: &[f64], fp: &[f64], fq: &[f64], depth: u32) -> Result<()> {
        let mid = midpoint(p, q);
        let fm = self.map.lift(&mid);
        let chord = norm(&diff(fq, fp));
        let sagitta = norm(&diff(&fm, &midpoint(fp, fq)));
        if depth < MAX_DEPTH && (sagitta > SAGITTA_TOL * chord || chord > self.scale) {
            self.chord(p, &mid, fp, &fm, depth + 1)?;
            self.chord(&mid, q, &fm, fq, depth + 1)?;
        } else {
            self.out.push(fq.to_vec());
            if self.out.len() > self.max_points {
                return Err(Error::ResolutionExhausted { points: self.out.len(), max_points: self.max_points });
            }
        }
        Ok(())
    }
}

/// Length growth of a `delta`-segment of the unstable leaf through `x`,
/// for maps with one-dimensional unstable bundle.
///
/// The segment is tangent to the estimated `E^u` at `x` and is advanced as a
/// polyline in the lift; chords are split while their midpoint image deviates
/// from the chord by more than [`SAGITTA_TOL`] relative to its length, or while
/// they are longer than the map's resolution scale.
pub fn segment_growth<M: TorusMap + ?Sized>(map: &M, x: &[f64], delta: f64, n: usize, max_points: usize) -> Result<GrowthEstimate> {
    if map.linear().split.n_unstable != 1 {
        return Err(Error::InvalidArgument("segment growth needs a one-dimensional unstable bundle".into()));
    }
    let v = bundle_estimate(map, x, 1, DEFAULT_FRAME_ITERS)?;
    let seeds = 8;
    let mut points: Vec<Vec<f64>> = (0..=seeds)
        .map(|j| {
            let s = delta * (j as f64 / seeds as f64 - 0.5);
            x.iter().enumerate().map(|(i, xi)| xi + s * v[(i, 0)]).collect()
        })
        .collect();
    let mut length = polyline_length(&points);
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        // an integer translate keeps coordinates small; lengths are unchanged
        let shift: Vec<f64> = points[0].iter().map(|c| c.floor()).collect();
        for p in points.iter_mut() {
            for (c, s) in p.iter_mut().zip(&shift) {
                *c -= s;
            }
        }
        let images: Vec<Vec<f64>> = points.par_iter().map(|p| map.lift(p)).collect();
        let mut refiner = Refiner { map, scale: map.resolution_scale(), max_points, out: vec![images[0].clone()] };
        for j in 0..points.len() - 1 {
            refiner.chord(&points[j], &points[j + 1], &images[j], &images[j + 1], 0)?;
        }
        points = refiner.out;
        let next = polyline_length(&points);
        steps.push((next / length).ln());
        length = next;
    }
    Ok(GrowthEstimate::new(1, x.to_vec(), delta, steps))
}

/// `g_m = log |det(Q_{m+1}^T Df(x_m) Q_m)|` for frames `Q_m` of `E^u_{(1,i)}` along the orbit.
pub fn flag_cocycle_growth<M: TorusMap + ?Sized>(map: &M, x: &[f64], i: usize, n: usize) -> Result<GrowthEstimate> {
    bundle_estimate(map, x, i, DEFAULT_FRAME_ITERS)?;
    let steps = flag_steps(map, x, i, n)?;
    Ok(GrowthEstimate::new(i, x.to_vec(), 0.0, steps))
}

fn flag_steps<M: TorusMap + ?Sized>(map: &M, x: &[f64], i: usize, n: usize) -> Result<Vec<f64>> {
    let (orbit, frames) = flag_frames_along_orbit(map, x, i, n, DEFAULT_FRAME_ITERS)?;
    Ok((0..n)
        .map(|m| {
            let image = map.jacobian(&orbit[m]) * &frames[m];
            (frames[m + 1].transpose() * image).determinant().abs().ln()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub horizon: usize,
    /// `sup_x |(1/n) sum g_m(x) - target|` over the grid.
    pub sup_deviation: f64,
}

/// Finite-time flag exponents on the `grid_n^d` grid against `target`, for
/// each horizon.
pub fn uniform_convergence_profile<M: TorusMap + ?Sized>(
    map: &M,
    i: usize,
    horizons: &[usize],
    grid_n: usize,
    target: f64,
) -> Result<Vec<ProfileRow>> {
    let d = map.dim();
    let n_max = horizons.iter().copied().max().unwrap_or(0);
    let total = grid_n.pow(d as u32);
    let per_point: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let steps = flag_steps(map, &grid_point(idx, grid_n, d), i, n_max)?;
            Ok(horizons
                .iter()
                .map(|&h| (steps[..h].iter().sum::<f64>() / h as f64 - target).abs())
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(j, &horizon)| ProfileRow {
            horizon,
            sup_deviation: per_point.iter().map(|row| row[j]).fold(0.0, f64::max),
        })
        .collect())
}

/// Sampling parameters for the SRB exponent sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrbOptions {
    pub samples: usize,
    pub horizon: usize,
    pub transient: usize,
    pub seed: u64,
}

impl Default for SrbOptions {
    fn default() -> Self {
        Self { samples: 1000, horizon: 1000, transient: 100, seed: 42 }
    }
}

/// Average over Lebesgue-random starts of `(1/N) log |det Df^N|E^u|`.
pub fn srb_exponent_sum<M: TorusMap + ?Sized>(map: &M, options: SrbOptions) -> f64 {
    let d = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts: Vec<Vec<f64>> = (0..options.samples).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    let start_frame = map.linear().split.unstable_basis.clone();
    let values: Vec<f64> = starts
        .par_iter()
        .map(|x| {
            let mut p = x.clone();
            let mut q: DMatrix<f64> = start_frame.clone();
            let mut acc = 0.0;
            for step in 0..options.transient + options.horizon {
                let (next, log_det) = orthonormalize(map.jacobian(&p) * &q);
                if step >= options.transient {
                    acc += log_det;
                }
                q = next;
                p = map.eval_torus(&p);
            }
            acc / options.horizon as f64
        })
        .collect();
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyOptions {
    pub base: Vec<f64>,
    pub segment_horizon: usize,
    /// Initial segment length; [`default_delta`] when `None`.
    pub delta: Option<f64>,
    pub cocycle_horizon: usize,
    pub max_points: usize,
    pub srb: SrbOptions,
}

impl EntropyOptions {
    pub fn for_dimension(d: usize) -> Self {
        Self {
            base: [0.31, 0.58, 0.14, 0.72][..d.min(4)].iter().copied().chain(std::iter::repeat(0.5)).take(d).collect(),
            segment_horizon: 25,
            delta: None,
            cocycle_horizon: 200,
            max_points: DEFAULT_MAX_POINTS,
            srb: SrbOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    /// `sum log |beta^u_j|`, the entropy of the linear model.
    pub h_top_linear: f64,
    /// Leaf length growth, when `E^u` is one-dimensional.
    pub segment: Option<GrowthEstimate>,
    /// Flag cocycle growth for `i = 1..=n`.
    pub flags: Vec<GrowthEstimate>,
    pub srb_exponent_sum: f64,
    /// `h_top_linear - srb_exponent_sum`.
    pub ruelle_gap: f64,
}

pub fn entropy_report<M: TorusMap + ?Sized>(map: &M, options: &EntropyOptions) -> Result<EntropyReport> {
    let split = &map.linear().split;
    let h_top_linear = split.entropy();
    let segment = if split.n_unstable == 1 {
        let delta = options.delta.unwrap_or_else(|| default_delta(h_top_linear, options.segment_horizon));
        Some(segment_growth(map, &options.base, delta, options.segment_horizon, options.max_points)?)
    } else {
        None
    };
    let flags = (1..=split.n_unstable)
        .map(|i| flag_cocycle_growth(map, &options.base, i, options.cocycle_horizon))
        .collect::<Result<Vec<_>>>()?;
    let srb_exponent_sum = srb_exponent_sum(map, options.srb);
    Ok(EntropyReport { h_top_linear, segment, flags, srb_exponent_sum, ruelle_gap: h_top_linear - srb_exponent_sum })
}
