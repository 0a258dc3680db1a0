//! Majorana constellations and the search for maximally unpolarized pure states.
//!
//! A pure layer state factorizes as `prod_i [cos(theta_i/2) a+^dag + e^{i phi_i} sin(theta_i/2) a-^dag] |0,0>`,
//! so its amplitudes define a polynomial `sum_k sqrt(C(2S,k)) Psi_{k-S} x^k` whose
//! roots are `x_i = -e^{i phi_i} tan(theta_i / 2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{ln_binomial, Direction, HalfSpin};
use crate::error::{invalid, Error, Result};
use crate::linalg::{hermitian_eigen, CVector};
use crate::multipoles::{cumulative_a, tensor_basis};
use crate::optim::lbfgs;
use crate::states::LayerState;

/// The `2S` points of a pure spin-`S` state.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    pub spin: HalfSpin,
    pub points: Vec<Direction>,
}

impl Constellation {
    pub fn new(spin: HalfSpin, points: Vec<Direction>) -> Result<Self> {
        if points.len() != spin.twice() as usize {
            return invalid(format!("spin {spin} needs {} points, got {}", spin.twice(), points.len()));
        }
        if points.iter().any(|p| !p.theta.is_finite() || !p.phi.is_finite()) {
            return invalid("constellation points must be finite");
        }
        Ok(Constellation { spin, points })
    }
}

fn sqrt_binomial(n: u32, k: u32) -> f64 {
    (0.5 * ln_binomial(n as u64, k as u64)).exp()
}

fn pure_amplitudes(state: &LayerState) -> Result<CVector> {
    if let Some(psi) = state.pure_vector() {
        return Ok(psi.clone());
    }
    if state.purity() < 1.0 - 1e-10 {
        return invalid(format!("constellations need a pure state; purity is {}", state.purity()));
    }
    let (_, vecs) = hermitian_eigen(state.rho());
    Ok(vecs.column(0).into_owned())
}

fn horner(coef: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coef.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn newton_polish(coef: &[Complex64], mut x: Complex64) -> Complex64 {
    // Inside the unit disk polish on p, outside on the reversed polynomial in 1/x.
    let rev: Vec<Complex64> = coef.iter().rev().copied().collect();
    let inverted = x.norm() > 1.0;
    let (poly, mut y) = if inverted { (&rev[..], 1.0 / x) } else { (coef, x) };
    let mut best = horner(poly, y).0.norm();
    for _ in 0..50 {
        let (p, dp) = horner(poly, y);
        if dp.norm() == 0.0 {
            break;
        }
        let next = y - p / dp;
        let val = horner(poly, next).0.norm();
        if !(val < best) {
            break;
        }
        best = val;
        y = next;
    }
    if inverted {
        x = 1.0 / y;
    } else {
        x = y;
    }
    x
}

/// Roots of `sum_k coef[k] x^k` with nonzero leading and constant terms.
fn polynomial_roots(coef: &[Complex64]) -> Vec<Complex64> {
    let d = coef.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coef[d];
    let mut comp = DMatrix::<Complex64>::zeros(d, d);
    for i in 1..d {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..d {
        comp[(i, d - 1)] = -coef[i] / lead;
    }
    // Complex Schur form is triangular; its diagonal holds the eigenvalues.
    // The QR iteration can stall on symmetric root sets, hence the cap.
    let raw = match comp.try_schur(f64::EPSILON, 200 * d) {
        Some(schur) => {
            let (_, tri) = schur.unpack();
            (0..d).map(|i| tri[(i, i)]).collect()
        }
        None => aberth(coef),
    };
    raw.into_iter().map(|x| newton_polish(coef, x)).collect()
}

/// Aberth-Ehrlich simultaneous iteration from a slightly rotated circle.
fn aberth(coef: &[Complex64]) -> Vec<Complex64> {
    let d = coef.len() - 1;
    let lead = coef[d].norm();
    // Geometric mean of the root moduli as the starting radius.
    let radius = (coef[0].norm() / lead).powf(1.0 / d as f64).max(1e-3);
    let mut z: Vec<Complex64> =
        (0..d).map(|i| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / d as f64 + 0.4)).collect();
    for _ in 0..1000 {
        let mut moved = 0.0f64;
        for i in 0..d {
            let (p, dp) = horner(coef, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..d).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Majorana points of a pure state.
pub fn constellation(state: &LayerState) -> Result<Constellation> {
    let spin = state.spin();
    let t = spin.twice();
    let psi = pure_amplitudes(state)?;
    // Basis index i carries m = S - i, i.e. power k = S + m = 2S - i.
    let coef: Vec<Complex64> = (0..=t).map(|k| psi[(t - k) as usize] * sqrt_binomial(t, k)).collect();
    let scale = coef.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let zero = |c: &Complex64| c.norm() <= 1e-14 * scale;
    let lo = coef.iter().position(|c| !zero(c)).unwrap_or(0);
    let hi = coef.iter().rposition(|c| !zero(c)).unwrap_or(0);
    let mut points = vec![Direction::NORTH; lo];
    for r in polynomial_roots(&coef[lo..=hi]) {
        let z = -r;
        points.push(Direction::new(2.0 * z.norm().atan(), z.arg().rem_euclid(2.0 * std::f64::consts::PI)));
    }
    points.extend(std::iter::repeat(Direction::new(std::f64::consts::PI, 0.0)).take(t as usize - hi));
    Constellation::new(spin, points)
}

/// Pure state whose Majorana points are `c.points`, normalized, with arbitrary global phase.
pub fn state_from_constellation(c: &Constellation) -> Result<LayerState> {
    let t = c.spin.twice();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for p in &c.points {
        let (s, co) = (p.theta / 2.0).sin_cos();
        let a = Complex64::new(co, 0.0);
        let b = Complex64::from_polar(s, p.phi);
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (k, &v) in poly.iter().enumerate() {
            next[k + 1] += v * a;
            next[k] += v * b;
        }
        poly = next;
    }
    let psi = CVector::from_fn(t as usize + 1, |i, _| {
        let k = t - i as u32;
        poly[k as usize] / sqrt_binomial(t, k)
    });
    let n = psi.norm();
    if !(n > 1e-300) {
        return Err(Error::DegenerateInput("constellation expands to the zero vector".into()));
    }
    LayerState::from_pure(c.spin, psi)
}

/// Largest `M` with `A_M < tol`; zero when the dipole already exceeds `tol`.
pub fn anticoherence_order(state: &LayerState, tol: f64) -> usize {
    let t = state.spin().twice() as usize;
    let mut order = 0;
    for m in 1..=t {
        match cumulative_a(state, m) {
            Ok(a) if a < tol => order = m,
            _ => break,
        }
    }
    order
}

/// Certification threshold for `A_M = 0`.
pub const KING_TOL: f64 = 1e-10;

/// Result of a search for a state with vanishing `A_M`.
#[derive(Clone, Debug)]
pub struct KingCandidate {
    pub state: LayerState,
    pub order: usize,
    pub residual: f64,
}

impl KingCandidate {
    pub fn certified(&self) -> bool {
        self.residual < KING_TOL
    }
}

/// `A_M` and its gradient for an unnormalized amplitude vector.
///
/// The vector is `[Re x0, Re x1, Im x1, ...]`: the global phase is fixed by a real `x0`.
fn a_m_with_gradient(spin: HalfSpin, m: usize, p: &[f64]) -> (f64, Vec<f64>) {
    let d = spin.dim();
    let basis = tensor_basis(spin);
    let mut x = vec![Complex64::new(p[0], 0.0); d];
    for i in 1..d {
        x[i] = Complex64::new(p[2 * i - 1], p[2 * i]);
    }
    let n: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    if n < 1e-300 {
        return (f64::INFINITY, vec![0.0; p.len()]);
    }
    let mut big_f = 0.0;
    let mut g = vec![Complex64::new(0.0, 0.0); d];
    for k in 1..=m {
        for q in -(k as i64)..=(k as i64) {
            // z = x^dag T^dag x
            let z = basis.pure_multipole(&x, k, q);
            big_f += z.norm_sqr();
            basis.apply_adjoint_into(k, q, &x, z.conj(), &mut g);
            basis.apply_into(k, q, &x, z, &mut g);
        }
    }
    let f = big_f / (n * n);
    let mut grad = vec![0.0; p.len()];
    for (i, gi) in g.iter().enumerate() {
        let gi = gi / (n * n) - x[i] * (2.0 * f / n);
        if i == 0 {
            grad[0] = 2.0 * gi.re;
        } else {
            grad[2 * i - 1] = 2.0 * gi.re;
            grad[2 * i] = 2.0 * gi.im;
        }
    }
    (f, grad)
}

/// Multi-start L-BFGS on `A_M` over normalized amplitudes.
///
/// Restart `r` draws its start from a ChaCha stream `r` of `seed`; the best
/// residual wins, ties going to the lower restart index.
pub fn search_kings(spin: HalfSpin, m: usize, restarts: usize, seed: u64) -> Result<KingCandidate> {
    let t = spin.twice() as usize;
    if m < 1 || m > t {
        return invalid(format!("order M={m} outside 1..=2S={t}"));
    }
    let d = spin.dim();
    let dim = 2 * d - 1;
    let best = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let x0: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let f = |p: &[f64]| a_m_with_gradient(spin, m, p).0;
            let g = |p: &[f64]| a_m_with_gradient(spin, m, p).1;
            let mut res = lbfgs(f, g, &x0, 1000);
            // A second pass restarts the curvature memory near the minimum.
            let again = lbfgs(f, g, &res.x, 1000);
            if again.value < res.value {
                res = again;
            }
            (res, r)
        })
        .min_by(|a, b| a.0.value.total_cmp(&b.0.value).then(a.1.cmp(&b.1)))
        .map(|(res, _)| res)
        .ok_or_else(|| Error::Optimization("no restarts ran".into()))?;
    let mut psi = CVector::from_element(d, Complex64::new(best.x[0], 0.0));
    for i in 1..d {
        psi[i] = Complex64::new(best.x[2 * i - 1], best.x[2 * i]);
    }
    let state = LayerState::from_pure(spin, psi)?;
    let residual = cumulative_a(&state, m)?;
    Ok(KingCandidate { state, order: m, residual })
}

/// A tabulated anticoherent state.
#[derive(Clone, Debug)]
pub struct KingEntry {
    pub spin: HalfSpin,
    pub order: usize,
    /// Nonzero amplitudes keyed by `2m`.
    pub amplitudes: Vec<(i64, f64)>,
    pub shape: &'static str,
}

impl KingEntry {
    pub fn state(&self) -> Result<LayerState> {
        let mut psi = CVector::zeros(self.spin.dim());
        for &(m_twice, a) in &self.amplitudes {
            let i = self
                .spin
                .index_of(m_twice)
                .ok_or_else(|| Error::InvalidArgument(format!("m={m_twice}/2 outside spin {}", self.spin)))?;
            psi[i] = Complex64::new(a, 0.0);
        }
        LayerState::from_pure(self.spin, psi)
    }
}

/// Known maximally unpolarized states with their orders.
///
/// The S=2 and S=6 amplitudes are the normalized ones; as usually printed
/// they do not have unit norm.
pub fn known_kings() -> Vec<KingEntry> {
    let h = HalfSpin::from_twice;
    let s = f64::sqrt;
    vec![
        KingEntry { spin: h(2), order: 1, amplitudes: vec![(0, 1.0)], shape: "radial line" },
        KingEntry { spin: h(3), order: 1, amplitudes: vec![(3, s(0.5)), (-3, s(0.5))], shape: "equatorial triangle" },
        KingEntry { spin: h(4), order: 2, amplitudes: vec![(-2, s(2.0 / 3.0)), (4, s(1.0 / 3.0))], shape: "tetrahedron" },
        KingEntry { spin: h(6), order: 3, amplitudes: vec![(4, s(0.5)), (-4, s(0.5))], shape: "octahedron" },
        KingEntry {
            spin: h(7),
            order: 2,
            amplitudes: vec![(-5, s(7.0 / 18.0)), (1, s(7.0 / 18.0)), (7, s(2.0 / 9.0))],
            shape: "two triangles + pole",
        },
        KingEntry {
            spin: h(8),
            order: 3,
            amplitudes: vec![(8, s(5.0 / 24.0)), (-8, s(5.0 / 24.0)), (0, s(7.0 / 12.0))],
            shape: "cube",
        },
        KingEntry {
            spin: h(9),
            order: 2,
            amplitudes: vec![(9, s(1.0 / 6.0)), (-9, s(1.0 / 6.0)), (3, s(1.0 / 3.0)), (-3, s(1.0 / 3.0))],
            shape: "three triangles",
        },
        KingEntry {
            spin: h(12),
            order: 5,
            amplitudes: vec![(10, s(7.0) / 5.0), (-10, -s(7.0) / 5.0), (0, -s(11.0) / 5.0)],
            shape: "icosahedron",
        },
    ]
}

/// `{"twice_spin": .., "points": [{"theta": .., "phi": ..}]}`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstellationJson {
    pub twice_spin: u32,
    pub points: Vec<PointJson>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PointJson {
    pub theta: f64,
    pub phi: f64,
}

impl From<&Constellation> for ConstellationJson {
    fn from(c: &Constellation) -> Self {
        ConstellationJson {
            twice_spin: c.spin.twice(),
            points: c.points.iter().map(|p| PointJson { theta: p.theta, phi: p.phi }).collect(),
        }
    }
}

impl TryFrom<ConstellationJson> for Constellation {
    type Error = Error;

    fn try_from(j: ConstellationJson) -> Result<Self> {
        Constellation::new(
            HalfSpin::from_twice(j.twice_spin),
            j.points.into_iter().map(|p| Direction::new(p.theta, p.phi)).collect(),
        )
    }
}
