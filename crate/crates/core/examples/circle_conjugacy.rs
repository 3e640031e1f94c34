//! Conjugacy to the doubling map: symbolic, by ODE, and its regularity.

use std::f64::consts::PI;

use rigidity::circle::{
    bilipschitz_certificate, distortion_constant, holder_exponent, invariant_density, ode_conjugacy, symbolic_conjugacy,
    ulam_matrix, CircleDiffeo, CircleLift, CircleMap, DensityApprox, DensityOptions, SmoothConjugate, TrigTerm,
};

fn grade(name: &str, map: &dyn CircleMap, level: usize) -> rigidity::Result<()> {
    let hc = symbolic_conjugacy(map, level)?;
    let fit = holder_exponent(&hc)?;
    let c = distortion_constant(map)?;
    let (qmin, qmax) = hc.quotient_range();
    println!("{name}");
    println!("  alpha {:.4} (r2 {:.5}), quotients [{qmin:.4}, {qmax:.4}]", fit.alpha, fit.r2);
    println!("  C_f {c:.3}, bi-Lipschitz certificate: {}", bilipschitz_certificate(&hc, c));

    let w = invariant_density(&ulam_matrix(map, 4096)?, DensityOptions::default())?;
    let ode = ode_conjugacy(&DensityApprox::uniform(4096), &w, hc.values[0], 1 << 14)?;
    let gap = (0..=hc.intervals()).map(|j| (ode.eval(hc.t(j)) - hc.values[j]).abs()).fold(0.0, f64::max);
    println!("  |ode - symbolic| = {gap:.3e}");
    Ok(())
}

fn main() -> rigidity::Result<()> {
    let h = CircleDiffeo::new(vec![TrigTerm::new(1, 0.1 / (2.0 * PI), 0.0)])?;
    grade("H o E_2 o H^-1", &SmoothConjugate::new(2, h)?, 12)?;
    let f = CircleLift::new(2, vec![TrigTerm::new(1, 0.5 / (2.0 * PI), 0.0)])?;
    grade("2x + (0.5/2pi) sin 2pi x", &f, 14)?;
    Ok(())
}
