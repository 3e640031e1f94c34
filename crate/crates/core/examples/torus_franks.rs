//! The conjugacy to the linear model by hyperbolic contraction on a grid.

use rigidity::numerics::torus_distance;
use rigidity::torus::conjugacy::{conjugacy_residual, franks_solve, toral_holder_estimate};
use rigidity::torus::{ConjugateToral, IntAutomorphism, TorusDiffeo, TrigField, TrigMode};

fn main() -> rigidity::Result<()> {
    let a = IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]])?;
    let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)])?;
    let h = TorusDiffeo::new(q)?;
    let g = ConjugateToral::new(a, h.clone())?;

    let sol = franks_solve(&g, 256, 200)?;
    println!("{} sweeps, contraction {:.4}", sol.differences.len(), sol.contraction);
    println!("residual on a 512^2 grid {:.3e}", conjugacy_residual(&g, &sol.field, 512));
    let x = [0.3, 0.7];
    println!("|h(x) - H^-1(x)| at {x:?}: {:.3e}", torus_distance(&sol.field.conjugacy(&x), &h.inverse(&x)?));
    for d in toral_holder_estimate(&g, &sol.field) {
        println!("alpha along {}: {:.4}", d.direction, d.alpha);
    }
    Ok(())
}
