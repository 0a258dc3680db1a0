//! Layer states, polarization sectors and the named states of two-mode optics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::angular::{ln_binomial, ln_factorial, Direction, HalfSpin};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, hermitian_eigenvalues, CMatrix, CVector};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;
const PURE_TOL: f64 = 1e-10;

/// Unit-trace density matrix on a single photon-number layer.
#[derive(Clone, Debug)]
pub struct LayerState {
    spin: HalfSpin,
    rho: CMatrix,
    pure: Option<CVector>,
}

impl LayerState {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(spin: HalfSpin, rho: CMatrix) -> Result<Self> {
        let d = spin.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return invalid(format!("spin {spin} needs a {d}x{d} matrix, got {}x{}", rho.nrows(), rho.ncols()));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("density matrix has non-finite entries");
        }
        let herm = (&rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return invalid(format!("density matrix is not Hermitian (deviation {herm:e})"));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return invalid(format!("density matrix trace is {tr}, expected 1"));
        }
        let rho = (&rho + rho.adjoint()) * c(0.5);
        let lowest = hermitian_eigenvalues(&rho).last().copied().unwrap_or(0.0);
        if lowest < -PSD_TOL {
            return invalid(format!("density matrix has negative eigenvalue {lowest:e}"));
        }
        Ok(Self::assemble(spin, rho))
    }

    /// Pure state from an amplitude vector; the vector is normalized.
    pub fn from_pure(spin: HalfSpin, psi: CVector) -> Result<Self> {
        if psi.len() != spin.dim() {
            return invalid(format!("spin {spin} needs {} amplitudes, got {}", spin.dim(), psi.len()));
        }
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateInput("amplitude vector has zero or non-finite norm".into()));
        }
        let psi = psi / c(norm);
        let rho = &psi * psi.adjoint();
        Ok(LayerState { spin, rho, pure: Some(psi) })
    }

    // Trusted constructor for matrices produced by unitary maps of valid states.
    pub(crate) fn from_trusted(spin: HalfSpin, rho: CMatrix) -> Self {
        let rho = (&rho + rho.adjoint()) * c(0.5);
        Self::assemble(spin, rho)
    }

    fn assemble(spin: HalfSpin, rho: CMatrix) -> Self {
        let purity = crate::linalg::trace_product_re(&rho, &rho);
        let pure = if (purity - 1.0).abs() < PURE_TOL { dominant_vector(&rho) } else { None };
        LayerState { spin, rho, pure }
    }

    pub fn spin(&self) -> HalfSpin {
        self.spin
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// Amplitude vector when the state is pure to within `1e-10` in purity.
    pub fn pure_vector(&self) -> Option<&CVector> {
        self.pure.as_ref()
    }

    pub fn is_pure(&self) -> bool {
        self.pure.is_some()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product_re(&self.rho, &self.rho)
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.rho)
    }

    /// `Tr(rho sigma)` for another state on the same layer.
    pub fn overlap(&self, other: &LayerState) -> f64 {
        crate::linalg::trace_product_re(&self.rho, &other.rho)
    }

    /// Expectation value of an operator on this layer.
    pub fn expect(&self, op: &CMatrix) -> Complex64 {
        crate::linalg::trace_product(&self.rho, op)
    }
}

fn dominant_vector(rho: &CMatrix) -> Option<CVector> {
    let (vals, vecs) = crate::linalg::hermitian_eigen(rho);
    if vals.is_empty() {
        return None;
    }
    let mut v: CVector = vecs.column(0).into_owned();
    // Fix the global phase on the largest component.
    let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 { (i, z.norm()) } else { acc });
    let ph = v[imax] / c(v[imax].norm());
    v /= ph;
    Some(v)
}

/// One photon-number block of a polarization sector.
#[derive(Clone, Debug)]
pub struct SectorLayer {
    pub weight: f64,
    pub state: LayerState,
}

impl SectorLayer {
    pub fn spin(&self) -> HalfSpin {
        self.state.spin()
    }
}

/// Block-diagonal two-mode state: weighted direct sum of layer states.
#[derive(Clone, Debug)]
pub struct PolarizationSector {
    layers: Vec<SectorLayer>,
}

impl PolarizationSector {
    /// Validates weights and strictly increasing spins.
    pub fn new(layers: Vec<SectorLayer>) -> Result<Self> {
        if layers.is_empty() {
            return invalid("sector needs at least one layer");
        }
        let mut total = 0.0;
        for (i, l) in layers.iter().enumerate() {
            if !(l.weight >= 0.0) || !l.weight.is_finite() {
                return invalid(format!("layer {i} has invalid weight {}", l.weight));
            }
            if i > 0 && layers[i - 1].spin() >= l.spin() {
                return invalid("layer spins must be strictly increasing");
            }
            total += l.weight;
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return invalid(format!("layer weights sum to {total}, expected 1"));
        }
        Ok(PolarizationSector { layers })
    }

    /// Builds a sector from unnormalized nonnegative weights; layers are sorted by spin.
    pub fn normalized(mut layers: Vec<SectorLayer>) -> Result<Self> {
        layers.sort_by_key(|l| l.spin());
        let total: f64 = layers.iter().map(|l| l.weight).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateInput("sector weights sum to zero".into()));
        }
        for l in &mut layers {
            l.weight /= total;
        }
        Self::new(layers)
    }

    pub fn single(state: LayerState) -> Self {
        PolarizationSector { layers: vec![SectorLayer { weight: 1.0, state }] }
    }

    pub fn layers(&self) -> &[SectorLayer] {
        &self.layers
    }

    pub(crate) fn map_states(&self, f: impl Fn(&LayerState) -> LayerState) -> Self {
        PolarizationSector {
            layers: self.layers.iter().map(|l| SectorLayer { weight: l.weight, state: f(&l.state) }).collect(),
        }
    }

    pub fn max_spin(&self) -> HalfSpin {
        self.layers.last().map(|l| l.spin()).unwrap_or(HalfSpin::ZERO)
    }

    /// Mean photon number `<N> = sum_S w_S 2S`.
    pub fn mean_photon_number(&self) -> f64 {
        self.layers.iter().map(|l| l.weight * l.spin().twice() as f64).sum()
    }
}

/// Two-mode Fock label `|n+, n->`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockLabel {
    pub n_plus: u32,
    pub n_minus: u32,
}

impl FockLabel {
    /// `(S, 2m)` with `S = (n+ + n-)/2`, `m = (n+ - n-)/2`.
    pub fn to_spin(self) -> (HalfSpin, i64) {
        (HalfSpin::from_twice(self.n_plus + self.n_minus), self.n_plus as i64 - self.n_minus as i64)
    }

    pub fn from_spin(spin: HalfSpin, m_twice: i64) -> Result<Self> {
        if spin.index_of(m_twice).is_none() {
            return invalid(format!("projection {m_twice}/2 invalid for spin {spin}"));
        }
        let t = spin.twice() as i64;
        Ok(FockLabel { n_plus: ((t + m_twice) / 2) as u32, n_minus: ((t - m_twice) / 2) as u32 })
    }
}

/// Amplitudes of the SU(2) coherent state `|S, n>`.
pub fn coherent_amplitudes(spin: HalfSpin, n: Direction) -> CVector {
    let t = spin.twice() as u64;
    let (s, co) = (n.theta / 2.0).sin_cos();
    CVector::from_iterator(
        spin.dim(),
        (0..spin.dim()).map(|i| {
            let up = t - i as u64; // S + m
            let down = i as u64; // S - m
            let mag = (0.5 * ln_binomial(t, up)).exp() * co.powi(up as i32) * s.powi(down as i32);
            Complex64::from_polar(mag, -(up as f64) * n.phi)
        }),
    )
}

/// SU(2) coherent state along `n`.
pub fn su2_coherent(spin: HalfSpin, n: Direction) -> LayerState {
    let psi = coherent_amplitudes(spin, n);
    let rho = &psi * psi.adjoint();
    LayerState { spin, rho, pure: Some(psi) }
}

fn basis_vector(spin: HalfSpin, m_twice: i64) -> CVector {
    let mut v = CVector::zeros(spin.dim());
    v[spin.index_of(m_twice).expect("valid projection")] = c(1.0);
    v
}

/// `|S, m>` with `m` given as a twice-value.
pub fn basis_state(spin: HalfSpin, m_twice: i64) -> Result<LayerState> {
    if spin.index_of(m_twice).is_none() {
        return invalid(format!("projection {m_twice}/2 invalid for spin {spin}"));
    }
    LayerState::from_pure(spin, basis_vector(spin, m_twice))
}

/// `(|S,S> - |S,-S>)/sqrt 2`.
pub fn noon(spin: HalfSpin) -> Result<LayerState> {
    if spin.twice() == 0 {
        return invalid("NOON state needs S >= 1/2");
    }
    let t = spin.twice() as i64;
    let psi = basis_vector(spin, t) - basis_vector(spin, -t);
    LayerState::from_pure(spin, psi)
}

/// Maximally mixed layer state.
pub fn unpolarized(spin: HalfSpin) -> LayerState {
    let d = spin.dim();
    LayerState::from_trusted(spin, CMatrix::identity(d, d) * c(1.0 / d as f64))
}

/// Relative-phase state `|delta_r>`, `delta_r = 2 pi r/(2S+1)`.
///
/// `r` ranges over `-floor(S) ..= ceil(S)`, which gives the `2S+1` distinct states.
pub fn relative_phase_state(spin: HalfSpin, r: i64) -> Result<LayerState> {
    let t = spin.twice() as i64;
    let lo = -(t / 2);
    let hi = (t + 1) / 2;
    if r < lo || r > hi {
        return invalid(format!("relative-phase index {r} outside {lo}..={hi}"));
    }
    let d = spin.dim();
    let delta = 2.0 * PI * r as f64 / d as f64;
    let psi = CVector::from_iterator(d, (0..d).map(|i| Complex64::from_polar(1.0, -spin.m(i) * delta)));
    LayerState::from_pure(spin, psi)
}

/// Spin-1 family `diag(lambda, 1 - 2 lambda, lambda)`.
pub fn first_order_unpolarized(lambda: f64) -> Result<LayerState> {
    if !(0.0..=0.5).contains(&lambda) {
        return invalid(format!("lambda must lie in [0, 1/2], got {lambda}"));
    }
    let rho = CMatrix::from_diagonal(&CVector::from_vec(vec![c(lambda), c(1.0 - 2.0 * lambda), c(lambda)]));
    Ok(LayerState::from_trusted(HalfSpin::integer(1), rho))
}

/// Default weight-truncation tolerance for infinite sectors.
pub const DEFAULT_EPS: f64 = 1e-12;
const MAX_LAYERS: usize = 4096;

fn vacuum_layer() -> LayerState {
    LayerState::from_trusted(HalfSpin::ZERO, CMatrix::identity(1, 1))
}

/// Polarization sector of the two-mode coherent state `|alpha+, alpha->`.
pub fn two_mode_coherent_sector(alpha_plus: Complex64, alpha_minus: Complex64, eps: f64) -> Result<PolarizationSector> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0,1), got {eps}"));
    }
    let nbar = alpha_plus.norm_sqr() + alpha_minus.norm_sqr();
    if nbar == 0.0 {
        return Ok(PolarizationSector::single(vacuum_layer()));
    }
    let dir = Direction::new(
        2.0 * alpha_minus.norm().atan2(alpha_plus.norm()),
        (alpha_minus.arg() - alpha_plus.arg()).rem_euclid(2.0 * PI),
    );
    let mut layers = Vec::new();
    let mut acc = 0.0;
    for n in 0..MAX_LAYERS as u64 {
        let w = (-nbar + n as f64 * nbar.ln() - ln_factorial(n)).exp();
        let spin = HalfSpin::from_twice(n as u32);
        layers.push(SectorLayer { weight: w, state: su2_coherent(spin, dir) });
        acc += w;
        if acc >= 1.0 - eps && n as f64 > nbar {
            return PolarizationSector::normalized(layers);
        }
    }
    invalid(format!("mean photon number {nbar} needs more than {MAX_LAYERS} layers"))
}

/// Polarization sector of the two-mode squeezed vacuum: layers `|S,0>` with
/// `w_S = tanh^{2S} r / cosh^2 r`.
pub fn tmsv_sector(r: f64, eps: f64) -> Result<PolarizationSector> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("squeezing must be nonnegative, got {r}"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0,1), got {eps}"));
    }
    let t2 = r.tanh().powi(2);
    let w0 = 1.0 / r.cosh().powi(2);
    let mut layers = Vec::new();
    let mut acc = 0.0;
    let mut w = w0;
    for s in 0..MAX_LAYERS as u32 {
        let spin = HalfSpin::integer(s);
        let state = if s == 0 { vacuum_layer() } else { LayerState::from_pure(spin, basis_vector(spin, 0))? };
        layers.push(SectorLayer { weight: w, state });
        acc += w;
        if acc >= 1.0 - eps {
            return PolarizationSector::normalized(layers);
        }
        w *= t2;
    }
    invalid(format!("squeezing {r} needs more than {MAX_LAYERS} layers"))
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(spin: HalfSpin, rng: &mut R) -> LayerState {
    let psi = CVector::from_iterator(
        spin.dim(),
        (0..spin.dim()).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
    );
    LayerState::from_pure(spin, psi).expect("gaussian vector is nonzero")
}

/// Random mixed state of the given rank (Ginibre ensemble).
pub fn random_mixed<R: Rng + ?Sized>(spin: HalfSpin, rank: usize, rng: &mut R) -> LayerState {
    let d = spin.dim();
    let g = CMatrix::from_fn(d, rank.max(1), |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    LayerState::from_trusted(spin, m * c(1.0 / tr))
}
