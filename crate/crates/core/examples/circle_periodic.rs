//! Periodic exponents of the doubling map and of a sine perturbation.

use std::f64::consts::PI;

use rigidity::circle::{constant_data_statistic, periodic_points_up_to, CircleLift, CircleMap, TrigTerm};

fn report(name: &str, map: &dyn CircleMap, n: usize) -> rigidity::Result<()> {
    let orbits = periodic_points_up_to(map, n)?;
    let s = constant_data_statistic(&orbits, map.degree())?;
    println!("{name}: {} periodic points up to period {n}", orbits.len());
    println!("  exponents in [{:.6}, {:.6}], spread {:.3e}, |mean - log d| {:.3e}", s.min, s.max, s.spread, s.log_d_gap);
    Ok(())
}

fn main() -> rigidity::Result<()> {
    report("E_2", &CircleLift::linear(2), 10)?;
    let f = CircleLift::new(2, vec![TrigTerm::new(1, 0.5 / (2.0 * PI), 0.0)])?;
    report("2x + (0.5/2pi) sin 2pi x", &f, 8)?;
    Ok(())
}
