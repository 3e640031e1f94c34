//! Absolutely continuous invariant density by Ulam's method.

use std::f64::consts::PI;

use rigidity::circle::{acim_exponent, invariant_density, ulam_matrix, CircleLift, DensityOptions, TrigTerm};

fn main() -> rigidity::Result<()> {
    let f = CircleLift::new(2, vec![TrigTerm::new(1, 0.5 / (2.0 * PI), 0.0)])?;
    let p = ulam_matrix(&f, 4096)?;
    let w = invariant_density(&p, DensityOptions::default())?;
    let (lo, hi) = w.min_max();
    println!("residual {:.2e} after {} iterations", w.residual, w.iterations);
    println!("density range [{lo:.4}, {hi:.4}]");
    println!("acim exponent {:.6} (log 2 = {:.6})", acim_exponent(&f, &w), 2f64.ln());
    for i in (0..4096).step_by(512) {
        println!("  rho({:.4}) = {:.5}", w.midpoint(i), w.weights[i]);
    }
    Ok(())
}
