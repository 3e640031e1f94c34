//! Eigen-splitting of a hyperbolic automorphism and cone certificates for
//! perturbations of growing size.

use rigidity::torus::{cone_certify, IntAutomorphism, ToralMap, TrigField, TrigMode};

fn main() -> rigidity::Result<()> {
    let a = IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]])?;
    println!("eigenvalues {:?}", a.split.eigenvalues.iter().map(|z| z.re).collect::<Vec<_>>());
    println!("exponents {:?}, entropy {:.6}", a.split.exponents(), a.split.entropy());

    let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)])?;
    for eps in [0.0, 0.05, 0.1, 0.2, 0.5] {
        let f = ToralMap::new(a.clone(), p.clone(), eps)?;
        let r = cone_certify(&f, 64);
        println!("eps {eps:<4}: margin {:+.4}, invariance slack {:+.4}, ok {}", r.margin, r.invariance_slack, r.ok());
    }

    let b = IntAutomorphism::with_simple_spectrum(vec![vec![2, 1, 0], vec![1, 2, 1], vec![0, 1, 1]])?;
    println!("3x3: exponents {:?}, irreducible {}", b.split.exponents(), b.split.irreducible);
    Ok(())
}
