//! Lattice periodic points of the cat map and their continuation to a
//! smooth conjugate and to a generic perturbation.

use rigidity::torus::periodic::{
    conservativity_indicator, continue_orbits_up_to, linear_periodic_count, per_index_spread, BundleIndex,
};
use rigidity::torus::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TorusMap, TrigField, TrigMode};

fn data(name: &str, map: &dyn TorusMap) -> rigidity::Result<()> {
    let orbits = continue_orbits_up_to(map, 6)?;
    println!("{name}: {} periodic points", orbits.len());
    for idx in [BundleIndex::unstable(1), BundleIndex::stable(1)] {
        let s = per_index_spread(&orbits, map.linear(), idx)?;
        println!("  {}: mean {:+.6}, spread {:.3e}, gap to linear {:.3e}", idx.label(), s.mean, s.spread, s.gap_to_linear);
    }
    println!("  conservativity indicator {:.3e}", conservativity_indicator(&orbits));
    Ok(())
}

fn main() -> rigidity::Result<()> {
    let a = IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]])?;
    let counts: Vec<i128> = (1..=8).map(|n| linear_periodic_count(&a, n)).collect();
    println!("|det(A^n - I)|, n = 1..8: {counts:?}");

    let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)])?;
    data("H o A o H^-1", &ConjugateToral::new(a.clone(), TorusDiffeo::new(q)?)?)?;
    let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)])?;
    data("A + 0.05 p", &ToralMap::new(a, p, 0.05)?)?;
    Ok(())
}
