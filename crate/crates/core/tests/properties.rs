use std::f64::consts::PI;

use proptest::prelude::*;
use rigidity::circle::{
    anchored_partition, distortion_constant, CircleDiffeo, CircleLift, CircleMap, SmoothConjugate, TrigTerm,
};
use rigidity::experiment::fmt_f64;
use rigidity::numerics::torus_distance;
use rigidity::torus::lattice;
use rigidity::torus::periodic::{linear_periodic_count, linear_periodic_points};
use rigidity::torus::{ConjugateToral, IntAutomorphism, ToralMap, TorusDiffeo, TorusMap, TrigField, TrigMode};

fn circle_map(a: f64, b: f64, k: u32) -> CircleLift {
    // |F' - 2| <= 2 pi k (|a| + |b|) < 1 keeps the map expanding
    CircleLift::new(2, vec![TrigTerm::new(k, a, b)]).unwrap()
}

fn cat() -> IntAutomorphism {
    IntAutomorphism::new(vec![vec![2, 1], vec![1, 1]]).unwrap()
}

fn toral(eps: f64) -> ToralMap {
    let p = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 1.0, 0.0), TrigMode::new(1, vec![1, 0], 0.5, 0.3)]).unwrap();
    ToralMap::new(cat(), p, eps).unwrap()
}

fn conjugate(s: f64) -> ConjugateToral {
    let q = TrigField::new(2, vec![TrigMode::new(0, vec![0, 1], 0.02 * s, 0.01 * s), TrigMode::new(1, vec![1, 1], 0.015 * s, 0.0)])
        .unwrap();
    ConjugateToral::new(cat(), TorusDiffeo::new(q).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circle_lift_has_degree(a in -0.05f64..0.05, b in -0.05f64..0.05, k in 1u32..3, x in -3.0f64..3.0, m in -4i32..4) {
        let f = circle_map(a, b, k);
        let shift = f.lift(x + f64::from(m)) - f.lift(x);
        prop_assert!((shift - 2.0 * f64::from(m)).abs() < 1e-12);
    }

    #[test]
    fn circle_derivative_matches_difference_quotient(a in -0.05f64..0.05, b in -0.05f64..0.05, x in 0.0f64..1.0) {
        let f = circle_map(a, b, 1);
        let h = 1e-6;
        let fd = (f.lift(x + h) - f.lift(x - h)) / (2.0 * h);
        prop_assert!((fd - f.derivative(x, 1)).abs() < 1e-7);
        let fd2 = (f.derivative(x + h, 1) - f.derivative(x - h, 1)) / (2.0 * h);
        prop_assert!((fd2 - f.derivative(x, 2)).abs() < 1e-5);
    }

    #[test]
    fn smooth_conjugate_commutes(c in -0.1f64..0.1, x in 0.0f64..1.0) {
        let h = CircleDiffeo::new(vec![TrigTerm::new(1, c / (2.0 * PI), 0.0)]).unwrap();
        let g = SmoothConjugate::new(2, h.clone()).unwrap();
        let lhs = g.lift(h.eval(x));
        let rhs = h.eval(2.0 * x);
        prop_assert!(((lhs - rhs) - (lhs - rhs).round()).abs() < 1e-12);
    }

    #[test]
    fn distortion_bound_on_partition_intervals(a in -0.07f64..0.07, n in 1usize..6, j in 0usize..64, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let f = circle_map(a, 0.0, 1);
        let c = distortion_constant(&f).unwrap();
        let part = anchored_partition(&f, n).unwrap();
        let (lo, hi) = part.interval(j % part.len());
        let (x, y) = (lo + s * (hi - lo), lo + t * (hi - lo));
        let ratio = f.iterate_derivative(x, n) / f.iterate_derivative(y, n);
        prop_assert!(ratio <= c && ratio >= 1.0 / c, "ratio {ratio}, C {c}");
    }

    #[test]
    fn toral_lift_is_equivariant(eps in 0.0f64..0.1, x in 0.0f64..1.0, y in 0.0f64..1.0, k0 in -3i32..3, k1 in -3i32..3) {
        let f = toral(eps);
        let base = f.lift(&[x, y]);
        let moved = f.lift(&[x + f64::from(k0), y + f64::from(k1)]);
        let ak = f.linear().apply(&[f64::from(k0), f64::from(k1)]);
        for i in 0..2 {
            prop_assert!((moved[i] - base[i] - ak[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn toral_jacobian_matches_difference_quotient(eps in 0.0f64..0.1, s in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        for f in [Box::new(toral(eps)) as Box<dyn TorusMap>, Box::new(conjugate(s))] {
            let j = f.jacobian(&[x, y]);
            let h = 1e-6;
            for col in 0..2 {
                let mut p = [x, y];
                let mut m = [x, y];
                p[col] += h;
                m[col] -= h;
                let (fp, fm) = (f.lift(&p), f.lift(&m));
                for row in 0..2 {
                    prop_assert!(((fp[row] - fm[row]) / (2.0 * h) - j[(row, col)]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn toral_inverse_round_trips(eps in 0.0f64..0.1, s in 0.0f64..1.0, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        for f in [Box::new(toral(eps)) as Box<dyn TorusMap>, Box::new(conjugate(s))] {
            let back = f.inverse_torus(&f.eval_torus(&[x, y])).unwrap();
            prop_assert!(torus_distance(&back, &[x, y]) < 1e-10);
        }
    }

    #[test]
    fn lattice_points_are_fixed_by_the_power(n in 1u32..6) {
        let a = cat();
        let an = lattice::pow(&a.matrix, n);
        let pts = linear_periodic_points(&a, n).unwrap();
        prop_assert_eq!(pts.len() as i128, linear_periodic_count(&a, n));
        for p in pts {
            let image = lattice::mul_vec(&an, &p.numerators);
            for (v, u) in image.iter().zip(&p.numerators) {
                prop_assert_eq!((v - u).rem_euclid(p.denominator), 0);
            }
        }
    }

    #[test]
    fn verdict_numbers_round_trip(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
