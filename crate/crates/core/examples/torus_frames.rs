//! Unstable and stable directions of a perturbed 3-torus map along an orbit.

use rigidity::torus::frames::{bundle_estimate, invariance_defect};
use rigidity::torus::{IntAutomorphism, ToralMap, TorusMap, TrigField, TrigMode};

fn main() -> rigidity::Result<()> {
    let a = IntAutomorphism::with_simple_spectrum(vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 1]])?;
    let p = TrigField::new(
        3,
        vec![TrigMode::new(0, vec![0, 1, 0], 1.0, 0.0), TrigMode::new(1, vec![0, 0, 1], 0.5, 0.2), TrigMode::new(2, vec![1, 0, 0], 0.3, 0.0)],
    )?;
    let f = ToralMap::new(a, p, 0.01)?;
    let x = [0.1, 0.2, 0.3];
    let fx = f.eval_torus(&x);
    for i in 1..=f.linear().split.n_unstable {
        let e = bundle_estimate(&f, &x, i, 60)?;
        let ef = bundle_estimate(&f, &fx, i, 60)?;
        println!("E^u_(1,{i}) at x: {} columns, invariance defect {:.2e}", e.ncols(), invariance_defect(&f, &x, &e, &ef));
    }
    Ok(())
}
