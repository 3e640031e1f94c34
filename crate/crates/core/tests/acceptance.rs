//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`. Oracles here are
//! written against closed forms and do not call the code paths they check.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use rigidity::circle::{
    acim_exponent, bilipschitz_certificate, constant_data_statistic, distortion_constant, holder_exponent,
    invariant_density, ode_conjugacy, periodic_points, periodic_points_up_to, symbolic_conjugacy, ulam_matrix,
    CircleDiffeo, CircleLift, DensityApprox, DensityOptions, SmoothConjugate, TrigTerm,
};
use rigidity::experiment::{run_config, ExperimentConfig};
use rigidity::numerics::torus_distance;
use rigidity::torus::conjugacy::{conjugacy_residual, franks_solve};
use rigidity::torus::entropy::{entropy_report, uniform_convergence_profile, EntropyOptions};
use rigidity::torus::periodic::{
    conservativity_indicator, continue_orbits, continue_orbits_up_to, linear_periodic_points, per_index_spread,
    BundleIndex,
};
use rigidity::torus::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TrigField, TrigMode};

/// Criteria whose failure is a recorded blocker rather than a regression.
const KNOWN_BLOCKERS: [usize; 2] = [3, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn error(e: rigidity::Error) -> Outcome {
    Outcome::new(false, format!("error: {e}"))
}

fn log_golden() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

// H(x) = x + (0.1 / 2 pi) sin 2 pi x on the circle.
fn h_circle(x: f64) -> f64 {
    x + 0.1 / (2.0 * PI) * (2.0 * PI * x).sin()
}

fn h_circle_inverse(y: f64) -> f64 {
    let (mut lo, mut hi) = (y - 0.1, y + 0.1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h_circle(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn circle_model() -> SmoothConjugate {
    SmoothConjugate::new(2, CircleDiffeo::new(vec![TrigTerm::new(1, 0.1 / (2.0 * PI), 0.0)]).unwrap()).unwrap()
}

fn circle_nonconstant() -> CircleLift {
    CircleLift::new(2, vec![TrigTerm::new(1, 0.5 / (2.0 * PI), 0.0)]).unwrap()
}

fn cat() -> IntAutomorphism {
    IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
}

// q(x) = (0.02 sin 2 pi x2 + 0.01 cos 2 pi x2, 0.015 sin 2 pi (x1 + x2)).
fn q_torus(x: &[f64]) -> [f64; 2] {
    let t = 2.0 * PI;
    [0.02 * (t * x[1]).sin() + 0.01 * (t * x[1]).cos(), 0.015 * (t * (x[0] + x[1])).sin()]
}

fn h_torus_inverse(y: &[f64]) -> Vec<f64> {
    let mut x = y.to_vec();
    for _ in 0..200 {
        let q = q_torus(&x);
        x = vec![y[0] - q[0], y[1] - q[1]];
    }
    x
}

fn torus_model() -> ConjugateToral {
    let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)]).unwrap();
    ConjugateToral::new(cat(), TorusDiffeo::new(q).unwrap()).unwrap()
}

fn torus_generic() -> ToralMap {
    let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)]).unwrap();
    ToralMap::new(cat(), p, 0.05).unwrap()
}

fn circle_linear_exactness() -> Outcome {
    let start = Instant::now();
    let f = CircleLift::linear(2);
    let mut worst: f64 = 0.0;
    for n in 1..=10usize {
        let orbits = match periodic_points(&f, n) {
            Ok(o) => o,
            Err(e) => return error(e),
        };
        if orbits.len() != (1usize << n) - 1 {
            return Outcome::new(false, format!("period {n}: {} points, expected {}", orbits.len(), (1usize << n) - 1));
        }
        worst = orbits.iter().map(|o| (o.exponent - 2f64.ln()).abs()).fold(worst, f64::max);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(worst < 1e-10 && secs < 10.0, format!("counts 2^n - 1 for n <= 10, max |exp - log 2| {worst:.2e}, {secs:.2} s"))
}

fn circle_positive_branch() -> Outcome {
    let g = circle_model();
    let run = || -> rigidity::Result<Outcome> {
        let orbits = periodic_points_up_to(&g, 8)?;
        let stat = constant_data_statistic(&orbits, 2)?;
        let hc = symbolic_conjugacy(&g, 12)?;
        let err = (0..=hc.intervals()).map(|j| (hc.values[j] - h_circle(hc.t(j))).abs()).fold(0.0, f64::max);
        let alpha = holder_exponent(&hc)?.alpha;
        let c = distortion_constant(&g)?;
        let bil = bilipschitz_certificate(&hc, c);
        Ok(Outcome::new(
            stat.spread < 1e-8 && err < 1e-4 && alpha >= 0.95 && bil,
            format!("spread {:.2e}, |h - H| {err:.2e}, alpha {alpha:.4}, bi-Lipschitz {bil} (C_f {c:.1})", stat.spread),
        ))
    };
    run().unwrap_or_else(error)
}

fn circle_negative_branch() -> Outcome {
    let f = circle_nonconstant();
    let run = || -> rigidity::Result<Outcome> {
        let fixed = periodic_points(&f, 1)?;
        let mut exps: Vec<f64> = fixed.iter().map(|o| o.exponent).collect();
        exps.sort_by(f64::total_cmp);
        let expected = [1.5f64.ln(), 2.5f64.ln()];
        let exact = exps.len() == 2 && exps.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-10);
        let stat = constant_data_statistic(&fixed, 2)?;
        let spread_ok = (stat.spread - 0.5108).abs() <= 1e-6;
        let hc = symbolic_conjugacy(&f, 14)?;
        let alpha = holder_exponent(&hc)?.alpha;
        let bil = bilipschitz_certificate(&hc, distortion_constant(&f)?);
        Ok(Outcome::new(
            exact && spread_ok && alpha < 0.95 && !bil,
            format!(
                "period-1 exponents {exps:.6?} (want log 1.5, log 2.5): {exact}; spread {:.4} (want 0.5108): {spread_ok}; alpha {alpha:.4} < 0.95: {}; level-14 certificate {bil} (want false)",
                stat.spread,
                alpha < 0.95
            ),
        ))
    };
    run().unwrap_or_else(error)
}

/// Birkhoff average of `log F'` along one orbit, computed without the crate.
fn birkhoff_oracle(steps: usize) -> f64 {
    let a = 0.5 / (2.0 * PI);
    let mut x: f64 = 0.123_456_789;
    for _ in 0..1000 {
        x = (2.0 * x + a * (2.0 * PI * x).sin()).rem_euclid(1.0);
    }
    let mut acc = 0.0;
    for _ in 0..steps {
        acc += (2.0 + 2.0 * PI * a * (2.0 * PI * x).cos()).ln();
        x = (2.0 * x + a * (2.0 * PI * x).sin()).rem_euclid(1.0);
    }
    acc / steps as f64
}

fn acim_fidelity() -> Outcome {
    let n = 4096;
    let run = || -> rigidity::Result<Outcome> {
        let f = circle_nonconstant();
        let w = invariant_density(&ulam_matrix(&f, n)?, DensityOptions::default())?;
        let lambda = acim_exponent(&f, &w);
        let birkhoff = birkhoff_oracle(1_000_000);
        let g = circle_model();
        let wg = invariant_density(&ulam_matrix(&g, n)?, DensityOptions::default())?;
        let exact: Vec<f64> =
            (0..n).map(|i| n as f64 * (h_circle_inverse((i + 1) as f64 / n as f64) - h_circle_inverse(i as f64 / n as f64))).collect();
        let l1 = wg.l1_distance(&exact);
        Ok(Outcome::new(
            w.residual <= 1e-8 && (lambda - birkhoff).abs() <= 1e-3 && l1 <= 5.0 / n as f64,
            format!(
                "residual {:.2e}, acim exponent {lambda:.5} vs Birkhoff {birkhoff:.5}, model L1 {l1:.2e} (limit {:.2e})",
                w.residual,
                5.0 / n as f64
            ),
        ))
    };
    run().unwrap_or_else(error)
}

fn ode_conjugacy_criterion() -> Outcome {
    let run = || -> rigidity::Result<Outcome> {
        let g = circle_model();
        let w = invariant_density(&ulam_matrix(&g, 4096)?, DensityOptions::default())?;
        let one = DensityApprox::uniform(4096);
        let forward = ode_conjugacy(&one, &w, 0.0, 1 << 14)?;
        let backward = ode_conjugacy(&w, &one, 0.0, 1 << 14)?;
        let mut err: f64 = 0.0;
        let mut round: f64 = 0.0;
        for j in 0..=forward.intervals() {
            let t = forward.t(j);
            err = err.max((forward.values[j] - h_circle(t)).abs());
            round = round.max((backward.eval(forward.values[j]) - t).abs());
        }
        Ok(Outcome::new(err <= 1e-4 && round <= 2e-4, format!("|z - H| {err:.2e}, |inverse o forward - id| {round:.2e}")))
    };
    run().unwrap_or_else(error)
}

fn toral_counts() -> Outcome {
    let a = cat();
    let f = ToralMap::unperturbed(a.clone());
    let l = log_golden();
    let mut counts = Vec::new();
    let mut worst: f64 = 0.0;
    for n in 1..=8u32 {
        // det(A^n - I) = 2 - tr(A^n) for det A = 1
        let (mut p, mut q, mut r, mut s) = (1i64, 0i64, 0i64, 1i64);
        for _ in 0..n {
            (p, q, r, s) = (2 * p + r, 2 * q + s, p + r, q + s);
        }
        let oracle = (2 - (p + s)).unsigned_abs() as usize;
        let points = match linear_periodic_points(&a, n) {
            Ok(v) => v.len(),
            Err(e) => return error(e),
        };
        if points != oracle {
            return Outcome::new(false, format!("period {n}: {points} points, determinant gives {oracle}"));
        }
        counts.push(points);
        let orbits = match continue_orbits(&f, n) {
            Ok(o) => o,
            Err(e) => return error(e),
        };
        for o in &orbits {
            worst = worst.max((o.exponents[0] + l).abs()).max((o.exponents[1] - l).abs());
        }
    }
    Outcome::new(worst < 1e-10, format!("counts {counts:?}, max |exp -+ log beta| {worst:.2e}"))
}

fn toral_rigidity() -> Outcome {
    let start = Instant::now();
    let g = torus_model();
    let run = || -> rigidity::Result<Outcome> {
        let orbits = continue_orbits_up_to(&g, 6)?;
        let mut worst: f64 = 0.0;
        for idx in [BundleIndex::unstable(1), BundleIndex::stable(1)] {
            let s = per_index_spread(&orbits, &g.linear, idx)?;
            worst = worst.max(s.spread).max(s.gap_to_linear);
        }
        let cons = conservativity_indicator(&orbits);
        let sol = franks_solve(&g, 512, 200)?;
        let residual = conjugacy_residual(&g, &sol.field, 1024);
        let mut err: f64 = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let y = [i as f64 / 64.0, j as f64 / 64.0];
                err = err.max(torus_distance(&sol.field.conjugacy(&y), &h_torus_inverse(&y)));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        Ok(Outcome::new(
            worst < 1e-8 && cons < 1e-8 && residual <= 1e-4 && err <= 1e-3 && secs < 120.0,
            format!("{} orbits, max spread/gap {worst:.2e}, conservativity {cons:.2e}, residual {residual:.2e}, |h - H^-1| {err:.2e}, {secs:.1} s", orbits.len()),
        ))
    };
    run().unwrap_or_else(error)
}

fn entropy_identities() -> Outcome {
    let run = || -> rigidity::Result<Outcome> {
        let l = log_golden();
        let opts = EntropyOptions::for_dimension(2);
        let lin = entropy_report(&ToralMap::unperturbed(cat()), &opts)?;
        let seg = lin.segment.as_ref().map_or(f64::NAN, |g| g.chi);
        let flag = lin.flags.last().map_or(f64::NAN, |g| g.chi);
        let values = [seg, flag, lin.h_top_linear, lin.srb_exponent_sum];
        let linear_ok = values.iter().all(|v| (v - l).abs() < 1e-3);
        let model = entropy_report(&torus_model(), &opts)?;
        Ok(Outcome::new(
            linear_ok && model.ruelle_gap.abs() < 5e-3,
            format!("cat map [segment, flag, h_top, srb] = {values:.6?} vs {l:.6}; model gap {:+.2e}", model.ruelle_gap),
        ))
    };
    run().unwrap_or_else(error)
}

fn decreasing_with_slack(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= 1.1 * w[0])
}

fn uniform_convergence() -> Outcome {
    let horizons = [10, 20, 40, 80, 160];
    let run = || -> rigidity::Result<Outcome> {
        let g = torus_model();
        let target = per_index_spread(&continue_orbits_up_to(&g, 6)?, &g.linear, BundleIndex::unstable(1))?.mean;
        let conj: Vec<f64> = uniform_convergence_profile(&g, 1, &horizons, 64, target)?.iter().map(|r| r.sup_deviation).collect();
        let conj_ok = decreasing_with_slack(&conj) && conj[conj.len() - 1] < 5e-3;

        let f = torus_generic();
        let s = per_index_spread(&continue_orbits_up_to(&f, 6)?, &f.linear, BundleIndex::unstable(1))?;
        let generic: Vec<f64> = uniform_convergence_profile(&f, 1, &horizons, 64, s.mean)?.iter().map(|r| r.sup_deviation).collect();
        let plateau = generic[generic.len() - 1] > s.spread / 2.0;
        Ok(Outcome::new(
            conj_ok && plateau,
            format!(
                "model profile {conj:.4?} (decreasing, final < 5e-3): {conj_ok}; generic profile {generic:.4?} final above spread/2 = {:.4}: {plateau}",
                s.spread / 2.0
            ),
        ))
    };
    run().unwrap_or_else(error)
}

fn run_dir(text: &str, threads: usize, dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut config = ExperimentConfig::from_toml(text).map_err(|e| e.to_string())?;
    config.run.threads = threads;
    let report = run_config(&config, dir).map_err(|e| e.to_string())?;
    Ok(report.artifacts.iter().map(|name| (name.clone(), std::fs::read(dir.join(name)).unwrap())).collect())
}

fn determinism() -> Outcome {
    let configs = [
        "[run]\nkind = \"circle\"\n[circle]\nterms = [[1, 0.07957747154594767, 0.0]]\nperiods = 8\nlevel = 14\n",
        "[run]\nkind = \"toral\"\n[torus]\nmatrix = [[2, 1], [1, 1]]\nepsilon = 0.05\nmodes = [[0, 1.0, 0.0, [0, 1]], [1, 0.5, 0.3, [1, 0]]]\nfranks_grid = 128\nprofile_grid = 32\n",
    ];
    let tmp = tempfile::tempdir().unwrap();
    let mut files = 0;
    for (k, text) in configs.iter().enumerate() {
        let runs: Result<Vec<_>, String> = [(1, "a"), (1, "b"), (8, "c")]
            .iter()
            .map(|(threads, tag)| run_dir(text, *threads, &tmp.path().join(format!("{k}{tag}"))))
            .collect();
        let runs = match runs {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, e),
        };
        if runs[0] != runs[1] || runs[0] != runs[2] {
            return Outcome::new(false, format!("config {k}: outputs differ"));
        }
        files += runs[0].len();
    }
    Outcome::new(true, format!("{files} files byte-identical across two runs and 1 vs 8 threads"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("circle linear exactness", circle_linear_exactness),
        ("circle constant data, smooth conjugate", circle_positive_branch),
        ("circle non-constant data", circle_negative_branch),
        ("invariant density fidelity", acim_fidelity),
        ("ODE conjugacy", ode_conjugacy_criterion),
        ("toral counts and exponents", toral_counts),
        ("toral constant-data rigidity", toral_rigidity),
        ("entropy identities", entropy_identities),
        ("uniform convergence", uniform_convergence),
        ("determinism", determinism),
    ];
    let total = Instant::now();
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        let t = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name} [{:.1} s]: {}", t.elapsed().as_secs_f64(), o.detail);
        if !o.pass && !KNOWN_BLOCKERS.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("total {:.1} s", total.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
