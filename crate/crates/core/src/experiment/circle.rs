use crate::circle::periodic::interval_multiplier_products;
use crate::circle::{
    acim_exponent, anchored_partition, bilipschitz_certificate, check_expanding, constant_data_statistic,
    distortion_constant, holder_exponent, inequality_report, invariant_density, ode_conjugacy, periodic_points_up_to,
    symbolic_conjugacy, ulam_matrix, CircleMap, DensityApprox, DensityOptions,
};

use super::config::{CircleSection, ExperimentConfig, Pipeline};
use super::verdict::{fmt_f64, Verdict};
use super::{csv, Artifacts, Op, RunError};

/// Partition tables beyond this level are not written.
const PARTITION_LEVEL_MAX: usize = 12;

const BASE_KEYS: [&str; 2] = ["EXPANSION_LAMBDA_MIN", "DISTORTION_CONSTANT"];
const PERIODIC_KEYS: [&str; 9] = [
    "PERIODIC_ORBITS",
    "CONSTANT_DATA",
    "CONSTANT_DATA_SPREAD",
    "CONSTANT_DATA_TOL",
    "EXPONENT_MIN",
    "EXPONENT_MAX",
    "LOG_D_MATCH",
    "LOG_D_GAP",
    "BOUNDED_DISTORTION",
];
const DENSITY_KEYS: [&str; 6] = [
    "DENSITY_RESIDUAL",
    "DENSITY_UNIQUENESS_GAP",
    "DENSITY_MIN",
    "DENSITY_MAX",
    "ACIM_EXPONENT",
    "ACIM_LOG_D_GAP",
];
const CONJUGACY_KEYS: [&str; 8] = [
    "REGULARITY_ALPHA",
    "REGULARITY_R2",
    "BILIPSCHITZ",
    "QUOTIENT_MIN",
    "QUOTIENT_MAX",
    "CONJUGACY_RESIDUAL",
    "ODE_SYMBOLIC_GAP",
    "CONJUGACY_TRUE_ERROR",
];

pub(crate) fn run(config: &ExperimentConfig, c: &CircleSection, out: &mut Artifacts) -> Result<Verdict, RunError> {
    let map = c.build()?;
    let map: &dyn CircleMap = map.as_ref();
    let keys: Vec<&str> =
        BASE_KEYS.iter().chain(&PERIODIC_KEYS).chain(&DENSITY_KEYS).chain(&CONJUGACY_KEYS).copied().collect();
    let mut v = Verdict::skeleton(&keys);

    let cert = check_expanding(map, map.resolution_hint()).require().op("check_expanding")?;
    let c_f = distortion_constant(map).op("distortion_constant")?;
    v.num("EXPANSION_LAMBDA_MIN", cert.lambda_min_bound);
    v.num("DISTORTION_CONSTANT", c_f);

    if config.wants(Pipeline::Periodic) {
        periodic(map, c, out, &mut v)?;
    }
    let mut density = None;
    if config.wants(Pipeline::Density) {
        let w = density_pipeline(map, c, config.run.seed, out, &mut v)?;
        density = Some(w);
    }
    if config.wants(Pipeline::Conjugacy) {
        let w = match density {
            Some(w) => w,
            None => solve_density(map, c, config.run.seed)?,
        };
        conjugacy(map, c, c_f, &w, out, &mut v)?;
    }
    Ok(v)
}

fn periodic(map: &dyn CircleMap, c: &CircleSection, out: &mut Artifacts, v: &mut Verdict) -> Result<(), RunError> {
    let orbits = periodic_points_up_to(map, c.periods).op("periodic_points")?;
    let stat = constant_data_statistic(&orbits, map.degree()).op("constant_data_statistic")?;
    out.write(
        "periodic_orbits.csv",
        &csv(
            "period,point,multiplier,exponent",
            orbits.iter().map(|o| [o.period.to_string(), fmt_f64(o.point), fmt_f64(o.multiplier), fmt_f64(o.exponent)]),
        ),
    )?;

    let level = c.periods.min(PARTITION_LEVEL_MAX);
    let partition = anchored_partition(map, level).op("anchored_partition")?;
    let products = interval_multiplier_products(&partition, &orbits);
    out.write(
        "partition.csv",
        &csv(
            "level,j,left,right,size,size_times_multiplier",
            (0..partition.len()).map(|j| {
                let (a, b) = partition.interval(j);
                [
                    level.to_string(),
                    j.to_string(),
                    fmt_f64(a),
                    fmt_f64(b),
                    fmt_f64(b - a),
                    products[j].map_or_else(String::new, fmt_f64),
                ]
            }),
        ),
    )?;

    let constant = stat.is_constant(c.tol_cd);
    v.set("PERIODIC_ORBITS", orbits.len().to_string());
    v.flag("CONSTANT_DATA", constant);
    v.num("CONSTANT_DATA_SPREAD", stat.spread);
    v.num("CONSTANT_DATA_TOL", c.tol_cd);
    v.num("EXPONENT_MIN", stat.min);
    v.num("EXPONENT_MAX", stat.max);
    v.flag("LOG_D_MATCH", constant && stat.log_d_gap < c.tol_cd);
    v.num("LOG_D_GAP", stat.log_d_gap);
    if constant {
        let report = inequality_report(map, c.periods, c.tol_cd).op("inequality_report")?;
        v.flag("BOUNDED_DISTORTION", report.within_bounds());
    } else {
        v.set("BOUNDED_DISTORTION", "n/a");
    }
    Ok(())
}

fn solve_density(map: &dyn CircleMap, c: &CircleSection, seed: u64) -> Result<DensityApprox, RunError> {
    let matrix = ulam_matrix(map, c.bins).op("ulam_matrix")?;
    let options = DensityOptions { max_iters: c.density_iters, residual_tol: c.residual_tol, seed, ..DensityOptions::default() };
    invariant_density(&matrix, options).op("invariant_density")
}

fn density_pipeline(
    map: &dyn CircleMap,
    c: &CircleSection,
    seed: u64,
    out: &mut Artifacts,
    v: &mut Verdict,
) -> Result<DensityApprox, RunError> {
    let w = solve_density(map, c, seed)?;
    let mut text = format!("# bins {}\n# midpoint weight\n", w.bins());
    for (i, x) in w.weights.iter().enumerate() {
        text.push_str(&format!("{} {}\n", fmt_f64(w.midpoint(i)), fmt_f64(*x)));
    }
    out.write("density.txt", &text)?;
    let (lo, hi) = w.min_max();
    let lambda = acim_exponent(map, &w);
    v.num("DENSITY_RESIDUAL", w.residual);
    v.num("DENSITY_UNIQUENESS_GAP", w.uniqueness_gap);
    v.num("DENSITY_MIN", lo);
    v.num("DENSITY_MAX", hi);
    v.num("ACIM_EXPONENT", lambda);
    v.num("ACIM_LOG_D_GAP", (lambda - f64::from(map.degree()).ln()).abs());
    Ok(w)
}

fn conjugacy(
    map: &dyn CircleMap,
    c: &CircleSection,
    c_f: f64,
    density: &DensityApprox,
    out: &mut Artifacts,
    v: &mut Verdict,
) -> Result<(), RunError> {
    let hc = symbolic_conjugacy(map, c.level).op("symbolic_conjugacy")?;
    let fit = holder_exponent(&hc).op("holder_exponent")?;
    let (qmin, qmax) = hc.quotient_range();
    let ode = ode_conjugacy(&DensityApprox::uniform(density.bins()), density, hc.values[0], c.ode_steps)
        .op("ode_conjugacy")?;

    let mut text = format!("# level {}\n# t h(t)\n", hc.level);
    for (j, h) in hc.values.iter().enumerate() {
        text.push_str(&format!("{} {}\n", fmt_f64(hc.t(j)), fmt_f64(*h)));
    }
    out.write("conjugacy_symbolic.txt", &text)?;
    let mut text = format!("# steps {}\n# t z(t)\n", ode.intervals());
    for (j, z) in ode.values.iter().enumerate() {
        text.push_str(&format!("{} {}\n", fmt_f64(ode.t(j)), fmt_f64(*z)));
    }
    out.write("conjugacy_ode.txt", &text)?;
    out.write(
        "regularity.csv",
        &csv(
            "m,oscillation,quotient_min,quotient_max",
            fit.rows.iter().map(|r| [r.m.to_string(), fmt_f64(r.oscillation), fmt_f64(r.quotient_min), fmt_f64(r.quotient_max)]),
        ),
    )?;

    let gap = (0..=hc.intervals()).map(|j| (ode.eval(hc.t(j)) - hc.values[j]).abs()).fold(0.0, f64::max);
    v.num("REGULARITY_ALPHA", fit.alpha);
    v.num("REGULARITY_R2", fit.r2);
    v.flag("BILIPSCHITZ", bilipschitz_certificate(&hc, c_f));
    v.num("QUOTIENT_MIN", qmin);
    v.num("QUOTIENT_MAX", qmax);
    v.num("CONJUGACY_RESIDUAL", hc.conjugacy_residual(map));
    v.num("ODE_SYMBOLIC_GAP", gap);
    match c.conjugacy()? {
        Some(h) => {
            let err = (0..=hc.intervals()).map(|j| (hc.values[j] - h.eval(hc.t(j))).abs()).fold(0.0, f64::max);
            v.num("CONJUGACY_TRUE_ERROR", err);
        }
        None => v.set("CONJUGACY_TRUE_ERROR", "n/a"),
    }
    Ok(())
}
