#![allow(dead_code)]

use nalgebra::Matrix2;
use num_complex::Complex64;
use poincare::states::{random_mixed, random_pure};
use poincare::{Direction, HalfSpin, LayerState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the sphere.
pub fn random_direction(rng: &mut impl Rng) -> Direction {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    Direction::new(z.acos(), phi)
}

pub fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random matrix rescaled to unit determinant.
pub fn random_sl2c(rng: &mut impl Rng) -> Matrix2<Complex64> {
    loop {
        let m = Matrix2::from_fn(|_, _| random_complex(rng));
        let det = m.determinant();
        if det.norm() > 1e-3 {
            return m / det.sqrt();
        }
    }
}

/// Pure or mixed with equal odds, mixed ones of random rank.
pub fn random_layer(spin: HalfSpin, rng: &mut impl Rng) -> LayerState {
    if rng.random_bool(0.5) {
        random_pure(spin, rng)
    } else {
        let rank = rng.random_range(1..=spin.dim());
        random_mixed(spin, rank, rng)
    }
}

/// `|<a|b>|^2` for pure states.
pub fn fidelity(a: &LayerState, b: &LayerState) -> f64 {
    a.overlap(b)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &poincare::CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
