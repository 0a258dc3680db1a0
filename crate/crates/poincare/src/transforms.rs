//! Polarization transformations: SU(2) rotations of layer states, sphere
//! displacements, the SU(2) to SO(3) map, Jones to Mueller matrices, polar
//! decomposition and exact Kerr evolution.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{Matrix2, Matrix3, Matrix4};
use num_complex::Complex64;

use crate::angular::{ln_factorial, Direction, HalfSpin};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, hermitian_eigen, unitary_exp, CMatrix, CVector};
use crate::states::{LayerState, PolarizationSector, SectorLayer};
use crate::stokes::stokes_matrices;

pub type JonesMatrix = Matrix2<Complex64>;
pub type MuellerMatrix = Matrix4<f64>;

/// `exp(-i angle n.S)` on layer `S`.
pub fn rotation_unitary(spin: HalfSpin, axis: Direction, angle: f64) -> CMatrix {
    let g = stokes_matrices(spin).along(axis.to_vector());
    unitary_exp(&g, angle)
}

fn sy_spectral(spin: HalfSpin) -> Arc<(Vec<f64>, CMatrix)> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<(Vec<f64>, CMatrix)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().expect("spectral cache poisoned").get(&spin.twice()) {
        return v.clone();
    }
    let built = Arc::new(hermitian_eigen(&stokes_matrices(spin).s2));
    cache.write().expect("spectral cache poisoned").entry(spin.twice()).or_insert(built).clone()
}

/// `exp(-i beta S2)`.
pub fn small_d_matrix(spin: HalfSpin, beta: f64) -> CMatrix {
    let sp = sy_spectral(spin);
    let (vals, vecs) = (&sp.0, &sp.1);
    let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |r, k| vecs[(r, k)] * Complex64::from_polar(1.0, -beta * vals[k]));
    scaled * vecs.adjoint()
}

/// `exp(-i alpha S3) exp(-i beta S2) exp(-i gamma S3)`.
pub fn euler_unitary(spin: HalfSpin, alpha: f64, beta: f64, gamma: f64) -> CMatrix {
    let d = small_d_matrix(spin, beta);
    CMatrix::from_fn(spin.dim(), spin.dim(), |r, k| {
        Complex64::from_polar(1.0, -alpha * spin.m(r) - gamma * spin.m(k)) * d[(r, k)]
    })
}

/// Sphere displacement `D(n) = exp(-i phi S3) exp(-i theta S2)`.
pub fn displacement(spin: HalfSpin, n: Direction) -> CMatrix {
    euler_unitary(spin, n.phi, n.theta, 0.0)
}

/// Active rotation of a 3-vector about `axis` by `angle` (right-handed).
pub fn rotate_vector(v: [f64; 3], axis: Direction, angle: f64) -> [f64; 3] {
    let n = axis.to_vector();
    let (s, co) = angle.sin_cos();
    let dot = n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
    let cross = [n[1] * v[2] - n[2] * v[1], n[2] * v[0] - n[0] * v[2], n[0] * v[1] - n[1] * v[0]];
    std::array::from_fn(|i| v[i] * co + cross[i] * s + n[i] * dot * (1.0 - co))
}

/// States that transform under SU(2) layer by layer.
pub trait Rotate: Sized {
    /// `rho -> U rho U^dagger` with `U = exp(-i angle n.S)`.
    fn rotate(&self, axis: Direction, angle: f64) -> Self;
    /// Conjugation by a spin-dependent unitary.
    fn conjugate_with(&self, u: &dyn Fn(HalfSpin) -> CMatrix) -> Self;
}

impl Rotate for LayerState {
    fn rotate(&self, axis: Direction, angle: f64) -> Self {
        self.conjugate_with(&|s| rotation_unitary(s, axis, angle))
    }

    fn conjugate_with(&self, u: &dyn Fn(HalfSpin) -> CMatrix) -> Self {
        let u = u(self.spin());
        match self.pure_vector() {
            Some(psi) => LayerState::from_pure(self.spin(), &u * psi).expect("unitary image of a unit vector"),
            None => LayerState::from_trusted(self.spin(), &u * self.rho() * u.adjoint()),
        }
    }
}

impl Rotate for PolarizationSector {
    fn rotate(&self, axis: Direction, angle: f64) -> Self {
        self.map_states(|s| s.rotate(axis, angle))
    }

    fn conjugate_with(&self, u: &dyn Fn(HalfSpin) -> CMatrix) -> Self {
        self.map_states(|s| s.conjugate_with(u))
    }
}

/// Pauli matrices `sigma_0..sigma_3`.
pub fn pauli(mu: usize) -> Matrix2<Complex64> {
    let z = c(0.0);
    let one = c(1.0);
    let i = Complex64::new(0.0, 1.0);
    match mu {
        0 => Matrix2::new(one, z, z, one),
        1 => Matrix2::new(z, one, one, z),
        2 => Matrix2::new(z, -i, i, z),
        3 => Matrix2::new(one, z, z, -one),
        _ => panic!("Pauli index must be 0..=3"),
    }
}

/// `R_jk = Tr(sigma_j U sigma_k U^-1)/2` for `U` in SU(2).
pub fn rotation_from_su2(u: &Matrix2<Complex64>) -> Result<Matrix3<f64>> {
    let unit = (u.adjoint() * u - Matrix2::identity()).norm();
    let det = u.determinant();
    if unit > 1e-10 || (det - c(1.0)).norm() > 1e-10 {
        return invalid(format!("matrix is not special unitary (|U^dag U - I| = {unit:e}, det = {det})"));
    }
    let ua = u.adjoint();
    Ok(Matrix3::from_fn(|j, k| 0.5 * (pauli(j + 1) * u * pauli(k + 1) * ua).trace().re))
}

/// `M_mu,nu = Tr(sigma_mu T sigma_nu T^dagger)/2`.
pub fn mueller_from_jones(t: &JonesMatrix) -> MuellerMatrix {
    let ta = t.adjoint();
    Matrix4::from_fn(|mu, nu| 0.5 * (pauli(mu) * t * pauli(nu) * ta).trace().re)
}

/// `T = U H` with `U` unitary and `H = (T^dagger T)^{1/2}`.
#[derive(Clone, Debug)]
pub struct PolarDecomposition {
    pub u: JonesMatrix,
    pub h: JonesMatrix,
    /// Set when `T` is singular; `U` is then fixed by the SVD completion of the kernel.
    pub singular: bool,
}

const SINGULAR_RATIO: f64 = 1e-13;

/// Polar decomposition that also covers the polarizer limit.
pub fn polar_decompose_lenient(t: &JonesMatrix) -> PolarDecomposition {
    let svd = t.svd(true, true);
    let w = svd.u.expect("requested left vectors");
    let vt = svd.v_t.expect("requested right vectors");
    let s = svd.singular_values;
    let sigma = Matrix2::new(c(s[0]), c(0.0), c(0.0), c(s[1]));
    let u = w * vt;
    let h = vt.adjoint() * sigma * vt;
    let smax = s[0].max(s[1]);
    let singular = smax == 0.0 || s[0].min(s[1]) <= SINGULAR_RATIO * smax;
    PolarDecomposition { u, h, singular }
}

/// Polar decomposition of a nonsingular Jones matrix.
pub fn polar_decompose(t: &JonesMatrix) -> Result<PolarDecomposition> {
    let p = polar_decompose_lenient(t);
    if p.singular {
        return Err(Error::DegenerateInput("Jones matrix is singular (polarizer limit)".into()));
    }
    Ok(p)
}

/// Two-mode pure state as Fock amplitudes `c_{n+, n-}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockState {
    pub amps: BTreeMap<(u32, u32), Complex64>,
}

impl FockState {
    /// Two-mode coherent state truncated to total weight `>= 1 - eps`.
    pub fn two_mode_coherent(alpha_plus: Complex64, alpha_minus: Complex64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return invalid(format!("eps must lie in (0,1), got {eps}"));
        }
        let nbar = alpha_plus.norm_sqr() + alpha_minus.norm_sqr();
        let mut amps = BTreeMap::new();
        let mut acc = 0.0;
        for n in 0..4096u32 {
            for np in 0..=n {
                let nm = n - np;
                let lnmag = -nbar / 2.0 - 0.5 * (ln_factorial(np as u64) + ln_factorial(nm as u64));
                let a = pow_c(alpha_plus, np) * pow_c(alpha_minus, nm) * lnmag.exp();
                acc += a.norm_sqr();
                amps.insert((np, nm), a);
            }
            if acc >= 1.0 - eps && n as f64 > nbar {
                let norm = acc.sqrt();
                amps.values_mut().for_each(|v| *v /= norm);
                return Ok(FockState { amps });
            }
        }
        invalid(format!("mean photon number {nbar} too large"))
    }

    /// Block-diagonal reduction onto photon-number layers.
    pub fn sector(&self) -> Result<PolarizationSector> {
        let mut by_n: BTreeMap<u32, Vec<((u32, u32), Complex64)>> = BTreeMap::new();
        for (&k, &v) in &self.amps {
            by_n.entry(k.0 + k.1).or_default().push((k, v));
        }
        let mut layers = Vec::new();
        for (n, entries) in by_n {
            let spin = HalfSpin::from_twice(n);
            let mut psi = CVector::zeros(spin.dim());
            for ((np, _), v) in entries {
                // index of m = (n+ - n-)/2 is n-.
                psi[(n - np) as usize] = v;
            }
            let w = psi.norm_squared();
            if w > 0.0 {
                layers.push(SectorLayer { weight: w, state: LayerState::from_pure(spin, psi)? });
            }
        }
        PolarizationSector::normalized(layers)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|v| v.norm_sqr()).sum()
    }
}

fn pow_c(z: Complex64, n: u32) -> Complex64 {
    if n == 0 {
        c(1.0)
    } else {
        z.powu(n)
    }
}

/// Cross-Kerr evolution `c_{n+,n-} -> exp(-i chi_t n+ n-) c_{n+,n-}`.
pub fn kerr_evolve_fock(state: &FockState, chi_t: f64) -> FockState {
    FockState {
        amps: state
            .amps
            .iter()
            .map(|(&(np, nm), &v)| ((np, nm), v * Complex64::from_polar(1.0, -chi_t * np as f64 * nm as f64)))
            .collect(),
    }
}

/// Layer phases `exp(-i chi_t (S^2 - m^2))`.
pub fn kerr_phases(spin: HalfSpin, chi_t: f64) -> CVector {
    let t = spin.twice() as i64;
    CVector::from_iterator(
        spin.dim(),
        (0..spin.dim()).map(|i| {
            let m = spin.m_twice(i);
            // (S^2 - m^2) = n+ n- = (t+m)(t-m)/4 in twice-values
            let npnm = ((t + m) / 2) * ((t - m) / 2);
            Complex64::from_polar(1.0, -chi_t * npnm as f64)
        }),
    )
}

/// Kerr evolution of a layer state.
pub fn kerr_evolve_layer(layer: &LayerState, chi_t: f64) -> LayerState {
    let ph = kerr_phases(layer.spin(), chi_t);
    match layer.pure_vector() {
        Some(psi) => LayerState::from_pure(layer.spin(), psi.component_mul(&ph)).expect("phase map keeps the norm"),
        None => {
            let d = layer.spin().dim();
            let rho = CMatrix::from_fn(d, d, |r, k| ph[r] * layer.rho()[(r, k)] * ph[k].conj());
            LayerState::from_trusted(layer.spin(), rho)
        }
    }
}

/// Kerr evolution of a sector; weights are untouched.
pub fn kerr_evolve_sector(sector: &PolarizationSector, chi_t: f64) -> PolarizationSector {
    sector.map_states(|s| kerr_evolve_layer(s, chi_t))
}
