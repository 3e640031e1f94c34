use crate::numerics::torus_distance;
use crate::torus::conjugacy::{
    conjugacy_residual, franks_solve, grid_injective, periodic_equivariance, toral_holder_estimate, GridField,
};
use crate::torus::entropy::{entropy_report, uniform_convergence_profile, EntropyOptions, GrowthEstimate, SrbOptions};
use crate::torus::periodic::{
    conservativity_indicator, continue_orbits_up_to, linear_periodic_count, per_index_spread, BundleIndex,
    ToralPeriodicOrbit,
};
use crate::torus::{cone_certify, TorusMap};

use super::config::{ExperimentConfig, Pipeline, TorusSection};
use super::verdict::{fmt_f64, Verdict};
use super::{csv, Artifacts, Op, RunError};

/// `franks_u.txt` keeps at most this many points per axis.
const FIELD_DUMP_AXIS: usize = 128;
/// Grid for the distance to a known conjugacy.
const TRUE_ERROR_GRID: usize = 64;
/// Relative slack allowed between consecutive profile values.
const PROFILE_SLACK: f64 = 0.1;

fn indices(map: &dyn TorusMap) -> Vec<BundleIndex> {
    let split = &map.linear().split;
    (1..=split.n_unstable).map(BundleIndex::unstable).chain((1..=split.n_stable).map(BundleIndex::stable)).collect()
}

fn keys(map: &dyn TorusMap) -> Vec<String> {
    let labels: Vec<String> = indices(map).iter().map(BundleIndex::label).collect();
    let mut k: Vec<String> = ["CONE_MARGIN", "CONE_INVARIANCE_SLACK", "CONE_OK"].map(String::from).to_vec();
    k.extend(["PERIODIC_ORBITS", "PERIODIC_COUNTS_MATCH", "CONSTANT_DATA", "CONSTANT_DATA_SPREAD", "CONSTANT_DATA_TOL"].map(String::from));
    k.extend(labels.iter().map(|l| format!("SPREAD_{l}")));
    k.push("LINEAR_MATCH".into());
    k.extend(labels.iter().map(|l| format!("LINEAR_MATCH_{l}")));
    k.extend(["CONSERVATIVE", "CONSERVATIVITY_INDICATOR"].map(String::from));
    k.extend(["FRANKS_SWEEPS", "FRANKS_CONTRACTION", "FRANKS_SUP_NORM", "FRANKS_RESIDUAL", "FRANKS_INJECTIVE", "FRANKS_PERIODIC_EQUIVARIANCE"].map(String::from));
    k.extend(labels.iter().map(|l| format!("REGULARITY_{l}")));
    k.push("CONJUGACY_TRUE_ERROR".into());
    k.extend(["ENTROPY_H_TOP_LINEAR", "ENTROPY_SEGMENT_CHI"].map(String::from));
    k.extend((1..=map.linear().split.n_unstable).map(|i| format!("ENTROPY_FLAG_CHI_{i}")));
    k.extend(["ENTROPY_SRB_SUM", "ENTROPY_RUELLE_GAP"].map(String::from));
    k.extend(["UNIFORM_CONVERGENCE_TARGET", "UNIFORM_CONVERGENCE_FINAL", "UNIFORM_CONVERGENCE_DECREASING"].map(String::from));
    k
}

struct Orbits<'a> {
    map: &'a dyn TorusMap,
    periods: u32,
    cached: Option<Vec<ToralPeriodicOrbit>>,
}

impl Orbits<'_> {
    fn get(&mut self) -> Result<&[ToralPeriodicOrbit], RunError> {
        if self.cached.is_none() {
            self.cached = Some(continue_orbits_up_to(self.map, self.periods).op("continue_orbits")?);
        }
        Ok(self.cached.as_deref().expect("filled above"))
    }
}

pub(crate) fn run(config: &ExperimentConfig, t: &TorusSection, out: &mut Artifacts) -> Result<Verdict, RunError> {
    let map = t.build()?;
    let map: &dyn TorusMap = map.as_ref();
    let keys = keys(map);
    let mut v = Verdict::skeleton(&keys.iter().map(String::as_str).collect::<Vec<_>>());

    let cone = cone_certify(map, t.cone_grid);
    out.write(
        "cone.csv",
        &csv(
            &format!("{},margin,invariance_slack", coord_header(map.dim())),
            cone.samples.iter().map(|s| {
                s.point.iter().map(|x| fmt_f64(*x)).chain([fmt_f64(s.margin), fmt_f64(s.invariance_slack)]).collect::<Vec<_>>()
            }),
        ),
    )?;
    v.num("CONE_MARGIN", cone.margin);
    v.num("CONE_INVARIANCE_SLACK", cone.invariance_slack);
    v.flag("CONE_OK", cone.ok());
    cone.require().op("cone_certify")?;

    let mut orbits = Orbits { map, periods: t.periods, cached: None };
    if config.wants(Pipeline::Periodic) {
        periodic(map, t, &mut orbits, out, &mut v)?;
    }
    if config.wants(Pipeline::Conjugacy) {
        conjugacy(map, t, &mut orbits, out, &mut v)?;
    }
    if config.wants(Pipeline::Entropy) {
        entropy(map, t, config.run.seed, &mut orbits, out, &mut v)?;
    }
    Ok(v)
}

fn coord_header(d: usize) -> String {
    (1..=d).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",")
}

fn periodic(map: &dyn TorusMap, t: &TorusSection, orbits: &mut Orbits, out: &mut Artifacts, v: &mut Verdict) -> Result<(), RunError> {
    let linear = map.linear();
    let d = map.dim();
    let list = orbits.get()?;
    let exps = (1..=d).map(|i| format!("exponent{i}")).collect::<Vec<_>>().join(",");
    out.write(
        "torus_periodic.csv",
        &csv(
            &format!("period,{},{exps},jac_log", coord_header(d)),
            list.iter().map(|o| {
                std::iter::once(o.period.to_string())
                    .chain(o.point.iter().map(|x| fmt_f64(*x)))
                    .chain(o.exponents.iter().map(|x| fmt_f64(*x)))
                    .chain([fmt_f64(o.jac_log)])
                    .collect::<Vec<_>>()
            }),
        ),
    )?;
    let counts_match = (1..=t.periods)
        .all(|n| list.iter().filter(|o| o.period == n).count() as i128 == linear_periodic_count(linear, n));
    v.set("PERIODIC_ORBITS", list.len().to_string());
    v.flag("PERIODIC_COUNTS_MATCH", counts_match);

    let mut max_spread: f64 = 0.0;
    let mut max_gap: f64 = 0.0;
    for index in indices(map) {
        let s = per_index_spread(list, linear, index).op("per_index_spread")?;
        let label = index.label();
        v.num(&format!("SPREAD_{label}"), s.spread);
        v.num(&format!("LINEAR_MATCH_{label}"), s.gap_to_linear);
        max_spread = max_spread.max(s.spread);
        max_gap = max_gap.max(s.gap_to_linear);
    }
    v.flag("CONSTANT_DATA", max_spread < t.tol_cd);
    v.num("CONSTANT_DATA_SPREAD", max_spread);
    v.num("CONSTANT_DATA_TOL", t.tol_cd);
    v.flag("LINEAR_MATCH", max_gap < t.tol_cd);
    let indicator = conservativity_indicator(list);
    v.flag("CONSERVATIVE", indicator < t.tol_cd);
    v.num("CONSERVATIVITY_INDICATOR", indicator);
    Ok(())
}

fn dump_field(field: &GridField) -> String {
    let stride = field.n.div_ceil(FIELD_DUMP_AXIS).max(1);
    let d = field.dim;
    let mut text = format!("# grid {} stride {}\n# {} {}\n", field.n, stride, coord_header(d).replace(',', " "), (1..=d).map(|i| format!("u{i}")).collect::<Vec<_>>().join(" "));
    for idx in 0..field.points() {
        let mut rest = idx;
        let mut on_lattice = true;
        let mut coords = vec![0usize; d];
        for c in (0..d).rev() {
            coords[c] = rest % field.n;
            on_lattice &= coords[c].is_multiple_of(stride);
            rest /= field.n;
        }
        if !on_lattice {
            continue;
        }
        let cells: Vec<String> = coords
            .iter()
            .map(|&k| fmt_f64(k as f64 / field.n as f64))
            .chain(field.at(idx).iter().map(|u| fmt_f64(*u)))
            .collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    text
}

fn conjugacy(map: &dyn TorusMap, t: &TorusSection, orbits: &mut Orbits, out: &mut Artifacts, v: &mut Verdict) -> Result<(), RunError> {
    let sol = franks_solve(map, t.franks_grid, t.franks_sweeps).op("franks_solve")?;
    let test_n = if t.test_grid == 0 { 2 * t.franks_grid } else { t.test_grid };
    let residual = conjugacy_residual(map, &sol.field, test_n);
    let holder = toral_holder_estimate(map, &sol.field);
    out.write("franks_u.txt", &dump_field(&sol.field))?;
    out.write(
        "holder.csv",
        &csv(
            "direction,alpha,r2,m,oscillation",
            holder.iter().flat_map(|h| {
                h.rows.iter().map(move |(m, osc)| [h.direction.clone(), fmt_f64(h.alpha), fmt_f64(h.r2), m.to_string(), fmt_f64(*osc)])
            }),
        ),
    )?;
    v.set("FRANKS_SWEEPS", sol.differences.len().to_string());
    v.num("FRANKS_CONTRACTION", sol.contraction);
    v.num("FRANKS_SUP_NORM", sol.field.sup_norm());
    v.num("FRANKS_RESIDUAL", residual);
    v.flag("FRANKS_INJECTIVE", grid_injective(&sol.field));
    v.num("FRANKS_PERIODIC_EQUIVARIANCE", periodic_equivariance(&sol.field, orbits.get()?));
    for h in &holder {
        v.num(&format!("REGULARITY_{}", h.direction), h.alpha);
    }
    match t.conjugacy()? {
        Some(h) => {
            let d = map.dim();
            let n = TRUE_ERROR_GRID;
            let mut err: f64 = 0.0;
            for idx in 0..n.pow(d as u32) {
                let x = crate::torus::dynamics::grid_point(idx, n, d);
                let exact = h.inverse(&x).op("conjugacy_true_error")?;
                err = err.max(torus_distance(&sol.field.conjugacy(&x), &exact));
            }
            v.num("CONJUGACY_TRUE_ERROR", err);
        }
        None => v.set("CONJUGACY_TRUE_ERROR", "n/a"),
    }
    Ok(())
}

fn growth_rows<'a>(name: &'a str, g: &'a GrowthEstimate) -> impl Iterator<Item = [String; 5]> + 'a {
    g.steps
        .iter()
        .zip(g.running_chi())
        .enumerate()
        .map(move |(m, (s, chi))| [name.to_string(), g.index.to_string(), (m + 1).to_string(), fmt_f64(*s), fmt_f64(chi)])
}

fn entropy(
    map: &dyn TorusMap,
    t: &TorusSection,
    seed: u64,
    orbits: &mut Orbits,
    out: &mut Artifacts,
    v: &mut Verdict,
) -> Result<(), RunError> {
    let d = map.dim();
    let mut options = EntropyOptions::for_dimension(d);
    if let Some(base) = &t.base_point {
        options.base = base.clone();
    }
    options.segment_horizon = t.segment_horizon;
    options.cocycle_horizon = t.cocycle_horizon;
    options.srb = SrbOptions { samples: t.srb_samples, horizon: t.srb_horizon, transient: t.srb_transient, seed };
    let report = entropy_report(map, &options).op("entropy_report")?;

    let list = orbits.get()?;
    let target = per_index_spread(list, map.linear(), BundleIndex::unstable(1)).op("per_index_spread")?.mean;
    let profile = uniform_convergence_profile(map, 1, &t.horizons, t.profile_grid, target).op("uniform_convergence_profile")?;

    let rows: Vec<[String; 5]> = report
        .segment
        .iter()
        .flat_map(|g| growth_rows("segment", g))
        .chain(report.flags.iter().flat_map(|g| growth_rows("flag", g)))
        .collect();
    out.write("growth.csv", &csv("estimator,index,step,log_growth,running_chi", rows))?;
    out.write(
        "profile.csv",
        &csv("horizon,sup_deviation", profile.iter().map(|r| [r.horizon.to_string(), fmt_f64(r.sup_deviation)])),
    )?;

    let mut table = Verdict::default();
    table.num("h_top_linear", report.h_top_linear);
    match &report.segment {
        Some(g) => table.num("segment_chi", g.chi),
        None => table.set("segment_chi", "n/a"),
    }
    for g in &report.flags {
        table.num(&format!("flag_chi_{}", g.index), g.chi);
    }
    table.num("srb_exponent_sum", report.srb_exponent_sum);
    table.num("ruelle_gap", report.ruelle_gap);
    out.write("entropy_report.txt", &table.render())?;

    v.num("ENTROPY_H_TOP_LINEAR", report.h_top_linear);
    match &report.segment {
        Some(g) => v.num("ENTROPY_SEGMENT_CHI", g.chi),
        None => v.set("ENTROPY_SEGMENT_CHI", "n/a"),
    }
    for g in &report.flags {
        v.num(&format!("ENTROPY_FLAG_CHI_{}", g.index), g.chi);
    }
    v.num("ENTROPY_SRB_SUM", report.srb_exponent_sum);
    v.num("ENTROPY_RUELLE_GAP", report.ruelle_gap);
    v.num("UNIFORM_CONVERGENCE_TARGET", target);
    v.num("UNIFORM_CONVERGENCE_FINAL", profile.last().map_or(0.0, |r| r.sup_deviation));
    v.flag("UNIFORM_CONVERGENCE_DECREASING", profile_decreasing(&profile.iter().map(|r| r.sup_deviation).collect::<Vec<_>>()));
    Ok(())
}

/// Each value at most `1 + PROFILE_SLACK` times its predecessor.
pub(crate) fn profile_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + PROFILE_SLACK))
}
