use std::f64::consts::PI;

use hopf_atlas::polyfield::{family_roots, roots, ComplexPoly, PolyError, SymmetricFamily};
use hopf_atlas::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn cube_roots_of_8i() {
    let p = ComplexPoly::new(vec![c(0.0, -8.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    let found = roots(&p, 1e-12).unwrap();
    let expected = [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI].map(|t| Complex64::from_polar(2.0, t));
    assert_eq!(found.len(), 3);
    for z in expected {
        assert!(found.iter().any(|r| (r.root - z).norm() < 1e-10 && r.multiplicity == 1), "{z}");
    }
}

#[test]
fn double_root_of_z_squared() {
    let found = roots(&ComplexPoly::from_real(&[0.0, 0.0, 1.0]), 1e-12).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].multiplicity, 2);
    assert!(found[0].root.norm() < 1e-6);
}

#[test]
fn m2_b1_family_roots_have_small_residual() {
    let p = SymmetricFamily::new(2, 0.0, 1.0).unwrap().expand();
    let found = roots(&p, 1e-12).unwrap();
    assert_eq!(found.iter().map(|r| r.multiplicity).sum::<usize>(), 4);
    for r in &found {
        assert!(p.eval(r.root).norm() < 1e-10);
    }
    assert!(found.iter().any(|r| r.root.norm() < 1e-8));
}

#[test]
fn family_roots_examples() {
    let r = family_roots(&SymmetricFamily::new(1, 4.0, 0.0).unwrap()).unwrap();
    assert_eq!(r.center_multiplicity, 0);
    assert!((r.outer[0] - c(2.0, 0.0)).norm() < 1e-12 && (r.outer[1] - c(-2.0, 0.0)).norm() < 1e-12);

    let r = family_roots(&SymmetricFamily::new(2, 0.0, 8.0).unwrap()).unwrap();
    assert_eq!(r.center_multiplicity, 1);
    for (k, t) in [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI].into_iter().enumerate() {
        assert!((r.outer[k] - Complex64::from_polar(2.0, t)).norm() < 1e-12);
    }

    let r = family_roots(&SymmetricFamily::new(3, 1.0, 0.0).unwrap()).unwrap();
    assert_eq!(r.center_multiplicity, 2);
    for (k, z) in [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)].into_iter().enumerate() {
        assert!((r.outer[k] - z).norm() < 1e-12);
    }
}

#[test]
fn collapsed_family_is_degenerate() {
    let f = SymmetricFamily::new(2, 0.0, 0.0).unwrap();
    assert!(matches!(family_roots(&f), Err(PolyError::DegenerateFamily { .. })));
}

#[test]
fn constants_have_no_roots() {
    assert!(matches!(roots(&ComplexPoly::from_real(&[3.0]), 1e-12), Err(PolyError::DegreeZero)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_roots_are_zeros(m in 1u32..=6, a in -10.0..10.0f64, b in -10.0..10.0f64) {
        prop_assume!(a.hypot(b) > 1e-3);
        let f = SymmetricFamily::new(m, a, b).unwrap();
        let p = f.expand();
        for z in family_roots(&f).unwrap().outer {
            prop_assert!(p.eval(z).norm() < 1e-12 * (1.0 + z.norm()).powi(2 * m as i32));
        }
    }

    #[test]
    fn general_finder_recovers_family_roots(m in 1u32..=6, a in -10.0..10.0f64, b in -10.0..10.0f64) {
        prop_assume!(a.hypot(b) > 0.1);
        let f = SymmetricFamily::new(m, a, b).unwrap();
        let found = roots(&f.expand(), 1e-12).unwrap();
        prop_assert_eq!(found.iter().map(|r| r.multiplicity).sum::<usize>(), 2 * m as usize);
        for z in family_roots(&f).unwrap().outer {
            prop_assert!(found.iter().any(|r| (r.root - z).norm() < 1e-8 * (1.0 + z.norm())));
        }
        if m > 1 {
            let center = found.iter().find(|r| r.root.norm() < 1e-3).expect("center cluster");
            prop_assert_eq!(center.multiplicity, m as usize - 1);
        }
    }
}
