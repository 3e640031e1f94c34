//! Unstable volume growth, flag cocycles and the SRB exponent sum.

use rigidity::torus::entropy::{entropy_report, uniform_convergence_profile, EntropyOptions};
use rigidity::torus::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TorusMap, TrigField, TrigMode};

fn show(name: &str, map: &dyn TorusMap) -> rigidity::Result<()> {
    let r = entropy_report(map, &EntropyOptions::for_dimension(2))?;
    println!("{name}");
    println!("  h_top(A)       {:.6}", r.h_top_linear);
    if let Some(g) = &r.segment {
        println!("  segment chi    {:.6}  (delta {:.2e}, n {})", g.chi, g.delta, g.horizon());
    }
    for g in &r.flags {
        println!("  flag chi_{}     {:.6}", g.index, g.chi);
    }
    println!("  SRB sum        {:.6}", r.srb_exponent_sum);
    println!("  gap            {:+.3e}", r.ruelle_gap);
    let profile = uniform_convergence_profile(map, 1, &[10, 20, 40, 80], 32, r.h_top_linear)?;
    for row in profile {
        println!("  n = {:>3}: sup |chi_n - h| = {:.4}", row.horizon, row.sup_deviation);
    }
    Ok(())
}

fn main() -> rigidity::Result<()> {
    let a = IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]])?;
    show("cat map", &ToralMap::unperturbed(a.clone()))?;
    let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02, 0.01), TrigMode::new(1, vec![1, 1], 0.015, 0.0)])?;
    show("H o A o H^-1", &ConjugateToral::new(a, TorusDiffeo::new(q)?)?)?;
    Ok(())
}
