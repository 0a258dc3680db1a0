mod common;

use std::f64::consts::PI;

use common::close;
use poincare::angular::{clebsch_gordan, spherical_harmonic, wigner_small_d, CgKey};
use poincare::linalg::unitary_exp;
use poincare::phase_space::SphereGrid;
use poincare::stokes::stokes_matrices;
use poincare::{Direction, Error, HalfSpin};
use proptest::prelude::*;

fn cg(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    clebsch_gordan(&CgKey::new(j1, m1, j2, m2, j, m)).unwrap()
}

#[test]
fn singlet_coefficient() {
    assert!(close(cg(1, 1, 1, -1, 0, 0), 0.5f64.sqrt(), 1e-15));
    assert!(close(cg(1, -1, 1, 1, 0, 0), -(0.5f64.sqrt()), 1e-15));
}

#[test]
fn coupling_to_spin_zero_is_identity() {
    for j in 0..=12 {
        for m in (-j..=j).step_by(2) {
            assert!(close(cg(j, m, 0, 0, j, m), 1.0, 1e-15));
        }
    }
}

#[test]
fn stretched_coefficient_closed_form() {
    // C^{SS}_{SS,K0} = sqrt(2S+1) (2S)! / sqrt((2S-K)! (2S+K+1)!)
    let want = 3f64.sqrt() * 2.0 / 120f64.sqrt();
    assert!(close(cg(2, 2, 4, 0, 2, 2), want, 1e-15));
    assert!(close(want, 0.316227766016838, 1e-14));
}

#[test]
fn selection_rules_give_zero() {
    assert_eq!(cg(2, 2, 2, 2, 2, 2), 0.0);
    assert_eq!(cg(2, 0, 2, 0, 8, 0), 0.0);
}

#[test]
fn parity_mismatch_is_rejected() {
    assert!(matches!(clebsch_gordan(&CgKey::new(1, 0, 2, 0, 1, 0)), Err(Error::InvalidArgument(_))));
    assert!(matches!(clebsch_gordan(&CgKey::new(2, 4, 2, 0, 2, 4)), Err(Error::InvalidArgument(_))));
}

#[test]
fn orthogonality_up_to_four() {
    for j1 in 0..=8i64 {
        for j2 in 0..=8i64 {
            let js: Vec<i64> = ((j1 - j2).abs()..=j1 + j2).step_by(2).collect();
            for &ja in &js {
                for &jb in &js {
                    let jm = ja.min(jb);
                    for ma in (-jm..=jm).step_by(2) {
                        let mut sum = 0.0;
                        for m1 in (-j1..=j1).step_by(2) {
                            let m2 = ma - m1;
                            if m2.abs() > j2 {
                                continue;
                            }
                            sum += cg(j1, m1, j2, m2, ja, ma) * cg(j1, m1, j2, m2, jb, ma);
                        }
                        let want = if ja == jb { 1.0 } else { 0.0 };
                        assert!(close(sum, want, 1e-12), "j1={j1} j2={j2} J={ja},{jb} M={ma}: {sum}");
                    }
                }
            }
        }
    }
}

#[test]
fn large_spin_coefficients_are_finite() {
    let v = cg(40, 0, 40, 0, 40, 0);
    assert!(v.is_finite());
    // Parity: (-1)^{j1+j2-J} flips the sign under swapping m's.
    assert!(close(cg(40, 2, 40, -2, 40, 0), cg(40, -2, 40, 2, 40, 0) * (-1f64).powi(20), 1e-13));
}

#[test]
fn harmonic_values() {
    let n = Direction::new(0.7, 1.9);
    assert!(close(spherical_harmonic(0, 0, n).unwrap().re, 1.0 / (4.0 * PI).sqrt(), 1e-15));
    let y10 = spherical_harmonic(1, 0, n).unwrap();
    assert!(close(y10.re, (3.0 / (4.0 * PI)).sqrt() * 0.7f64.cos(), 1e-15));
    assert!(y10.im.abs() < 1e-15);
    // Condon-Shortley: Y_11 = -sqrt(3/8pi) sin(theta) e^{i phi}
    let y11 = spherical_harmonic(1, 1, n).unwrap();
    let want = -(3.0 / (8.0 * PI)).sqrt() * 0.7f64.sin();
    assert!(close(y11.re, want * 1.9f64.cos(), 1e-15) && close(y11.im, want * 1.9f64.sin(), 1e-15));
    assert!(matches!(spherical_harmonic(1, 2, n), Err(Error::InvalidArgument(_))));
}

#[test]
fn harmonic_orthonormality_by_quadrature() {
    let grid = SphereGrid::new(16, 32).unwrap();
    let nodes: Vec<_> = (0..grid.len()).map(|k| grid.node(k)).collect();
    let norm: Vec<f64> = nodes.iter().map(|&n| spherical_harmonic(2, 1, n).unwrap().norm_sqr()).collect();
    assert!(close(grid.integrate(&norm), 1.0, 1e-12));
    for (k, q) in [(2, 0), (3, 1), (1, 1)] {
        let cross: Vec<f64> =
            nodes.iter().map(|&n| (spherical_harmonic(2, 1, n).unwrap() * spherical_harmonic(k, q, n).unwrap().conj()).re).collect();
        if (k, q) != (2, 1) {
            assert!(grid.integrate(&cross).abs() < 1e-12);
        }
    }
}

#[test]
fn small_d_examples() {
    let half = HalfSpin::from_twice(1);
    for beta in [0.0, 0.3, 2.0, PI] {
        assert!(close(wigner_small_d(half, 1, 1, beta).unwrap(), (beta / 2.0).cos(), 1e-15));
    }
    for twice in 0..=8u32 {
        let s = HalfSpin::from_twice(twice);
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(wigner_small_d(s, s.m_twice(i), s.m_twice(j), 0.0).unwrap(), want);
            }
        }
    }
    let one = HalfSpin::integer(1);
    for mp in [-2, 0, 2] {
        let row: f64 = [-2, 0, 2].iter().map(|&m| wigner_small_d(one, mp, m, 0.7).unwrap().powi(2)).sum();
        assert!(close(row, 1.0, 1e-14));
    }
    assert!(matches!(wigner_small_d(one, 4, 0, 0.1), Err(Error::InvalidArgument(_))));
}

#[test]
fn small_d_matches_exponential_of_s2() {
    for twice in 1..=12u32 {
        let s = HalfSpin::from_twice(twice);
        let m = stokes_matrices(s);
        for beta in [0.4, 1.3, 2.9] {
            let u = unitary_exp(&m.s2, beta);
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    let d = wigner_small_d(s, s.m_twice(i), s.m_twice(j), beta).unwrap();
                    assert!((u[(i, j)].re - d).abs() < 1e-12 && u[(i, j)].im.abs() < 1e-12, "2S={twice} beta={beta}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn harmonic_conjugation(k in 0i64..12, qf in 0.0f64..1.0, theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI)) {
        let q = ((2 * k + 1) as f64 * qf).floor() as i64 - k;
        let n = Direction::new(theta, phi);
        let a = spherical_harmonic(k, q, n).unwrap().conj();
        let b = spherical_harmonic(k, -q, n).unwrap() * if q % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn cg_exchange_symmetry(j1 in 0i64..7, j2 in 0i64..7, a in 0usize..8, b in 0usize..8, c in 0usize..8) {
        // C^{JM}_{j1 m1, j2 m2} = (-1)^{j1+j2-J} C^{JM}_{j2 m2, j1 m1}
        let js: Vec<i64> = ((j1 - j2).abs()..=j1 + j2).step_by(2).collect();
        let j = js[c % js.len()];
        let m1 = -j1 + 2 * (a as i64 % (j1 + 1));
        let m2 = -j2 + 2 * (b as i64 % (j2 + 1));
        let m = m1 + m2;
        prop_assume!(m.abs() <= j);
        let sign = if ((j1 + j2 - j) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((cg(j1, m1, j2, m2, j, m) - sign * cg(j2, m2, j1, m1, j, m)).abs() < 1e-13);
    }
}
