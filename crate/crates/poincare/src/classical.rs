//! Classical polarization of a monochromatic or partially coherent field.
//!
//! Stokes parameters follow the quantum-friendly convention used throughout
//! the crate: a factor 1/2 and the circular basis, so `S3` measures the
//! circular excess and `(S1, S2)` the linear part. [`ClassicalStokes::to_textbook`]
//! converts to the usual optics convention.

use nalgebra::{Matrix2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transforms::{pauli, MuellerMatrix};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Field amplitudes in the circular basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
}

impl JonesVector {
    pub fn new(a_plus: Complex64, a_minus: Complex64) -> Self {
        JonesVector { a_plus, a_minus }
    }

    /// `a_pm = (a_H +- i a_V) / sqrt 2`.
    pub fn from_hv(a_h: Complex64, a_v: Complex64) -> Self {
        let i = Complex64::i();
        JonesVector { a_plus: (a_h + i * a_v) * FRAC_1_SQRT_2, a_minus: (a_h - i * a_v) * FRAC_1_SQRT_2 }
    }

    /// Real amplitudes and phases: `a_H = E_H e^{i delta_H}`, `a_V = E_V e^{i delta_V}`.
    pub fn from_ellipse_amplitudes(e_h: f64, delta_h: f64, e_v: f64, delta_v: f64) -> Self {
        Self::from_hv(Complex64::from_polar(e_h, delta_h), Complex64::from_polar(e_v, delta_v))
    }

    pub fn to_hv(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        ((self.a_plus + self.a_minus) * FRAC_1_SQRT_2, (self.a_plus - self.a_minus) * (-i * FRAC_1_SQRT_2))
    }

    pub fn intensity(&self) -> f64 {
        self.a_plus.norm_sqr() + self.a_minus.norm_sqr()
    }

    pub fn apply(&self, t: &Matrix2<Complex64>) -> Self {
        JonesVector { a_plus: t[(0, 0)] * self.a_plus + t[(0, 1)] * self.a_minus, a_minus: t[(1, 0)] * self.a_plus + t[(1, 1)] * self.a_minus }
    }

    /// `J = A A^dag`, so `J_00 = |a+|^2` and `J_01 = a+ a-^*`.
    pub fn coherence(&self) -> CoherenceMatrix {
        let a = [self.a_plus, self.a_minus];
        CoherenceMatrix(Matrix2::from_fn(|i, j| a[i] * a[j].conj()))
    }
}

/// Orientation `psi` in `[0, pi)` and ellipticity `chi` in `[-pi/4, pi/4]` of the field ellipse.
pub fn ellipse_params(jones: &JonesVector) -> Result<(f64, f64)> {
    let (a_h, a_v) = jones.to_hv();
    let (e_h, e_v) = (a_h.norm(), a_v.norm());
    let total = e_h * e_h + e_v * e_v;
    if total <= 0.0 {
        return Err(Error::Undefined("zero field has no ellipse".into()));
    }
    let delta = a_v.arg() - a_h.arg();
    let psi = (0.5 * (2.0 * e_h * e_v * delta.cos()).atan2(e_h * e_h - e_v * e_v)).rem_euclid(std::f64::consts::PI);
    let chi = 0.5 * (2.0 * e_h * e_v * delta.sin() / total).clamp(-1.0, 1.0).asin();
    Ok((psi, chi))
}

/// Stokes four-vector `(S0, S1, S2, S3)` in units of the field per photon squared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalStokes {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl ClassicalStokes {
    pub fn from_vector(v: &Vector4<f64>) -> Self {
        ClassicalStokes { s0: v[0], s1: v[1], s2: v[2], s3: v[3] }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.s0, self.s1, self.s2, self.s3)
    }

    /// Fully polarized point `S1 = S0 cos2chi sin2psi`, `S2 = S0 cos2chi cos2psi`, `S3 = S0 sin2chi`.
    pub fn from_angles(s0: f64, psi: f64, chi: f64) -> Self {
        let c = (2.0 * chi).cos();
        ClassicalStokes { s0, s1: s0 * c * (2.0 * psi).sin(), s2: s0 * c * (2.0 * psi).cos(), s3: s0 * (2.0 * chi).sin() }
    }

    /// Inverse of [`Self::from_angles`] on the polarized part: `(psi, chi)`.
    pub fn angles(&self) -> Result<(f64, f64)> {
        let r = (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt();
        if r <= 0.0 {
            return Err(Error::Undefined("no polarized component".into()));
        }
        let chi = 0.5 * (self.s3 / r).clamp(-1.0, 1.0).asin();
        let psi = (0.5 * self.s1.atan2(self.s2)).rem_euclid(std::f64::consts::PI);
        Ok((psi, chi))
    }

    /// `S0^2 - S1^2 - S2^2 - S3^2`.
    pub fn minkowski(&self) -> f64 {
        self.s0 * self.s0 - self.s1 * self.s1 - self.s2 * self.s2 - self.s3 * self.s3
    }

    /// Textbook parameters: doubled, with the first and third components exchanged.
    pub fn to_textbook(&self) -> [f64; 4] {
        [2.0 * self.s0, 2.0 * self.s3, 2.0 * self.s2, 2.0 * self.s1]
    }

    pub fn from_textbook(t: [f64; 4]) -> Self {
        ClassicalStokes { s0: t[0] / 2.0, s1: t[3] / 2.0, s2: t[2] / 2.0, s3: t[1] / 2.0 }
    }

    /// `|S| / S0`.
    pub fn degree(&self) -> Result<f64> {
        if self.s0 <= 0.0 {
            return Err(Error::Undefined("zero intensity".into()));
        }
        Ok((self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt() / self.s0)
    }
}

/// `S_mu = A^dag sigma_mu A / 2`.
pub fn stokes_from_jones(jones: &JonesVector) -> ClassicalStokes {
    jones.coherence().stokes()
}

/// Stokes parameters as intensity excesses: `S1` from the 45/135 degree pair,
/// `S2` from H/V and `S3` from the circular pair.
pub fn stokes_from_intensity_excess(jones: &JonesVector) -> ClassicalStokes {
    let (a_h, a_v) = jones.to_hv();
    let a45 = (a_h + a_v) * FRAC_1_SQRT_2;
    let a135 = (a_v - a_h) * FRAC_1_SQRT_2;
    ClassicalStokes {
        s0: 0.5 * jones.intensity(),
        s1: 0.5 * (a45.norm_sqr() - a135.norm_sqr()),
        s2: 0.5 * (a_h.norm_sqr() - a_v.norm_sqr()),
        s3: 0.5 * (jones.a_plus.norm_sqr() - jones.a_minus.norm_sqr()),
    }
}

/// Hermitian positive semidefinite 2x2 polarization matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceMatrix(pub Matrix2<Complex64>);

impl CoherenceMatrix {
    pub fn new(j: Matrix2<Complex64>) -> Result<Self> {
        let herm = (j - j.adjoint()).norm();
        if herm > 1e-12 * j.norm().max(1.0) {
            return Err(Error::InvalidArgument(format!("coherence matrix is not Hermitian (defect {herm:.3e})")));
        }
        let c = CoherenceMatrix((j + j.adjoint()) * Complex64::new(0.5, 0.0));
        let (_, lm) = c.eigenvalues();
        if lm < -1e-12 {
            return Err(Error::InvalidArgument(format!("coherence matrix has negative eigenvalue {lm:.3e}")));
        }
        Ok(c)
    }

    /// `S0 I + S.sigma`.
    pub fn from_stokes(s: &ClassicalStokes) -> Result<Self> {
        let m = pauli(0) * Complex64::new(s.s0, 0.0)
            + pauli(1) * Complex64::new(s.s1, 0.0)
            + pauli(2) * Complex64::new(s.s2, 0.0)
            + pauli(3) * Complex64::new(s.s3, 0.0);
        Self::new(m)
    }

    pub fn intensity(&self) -> f64 {
        self.0.trace().re
    }

    pub fn stokes(&self) -> ClassicalStokes {
        let s = |mu: usize| 0.5 * (self.0 * pauli(mu)).trace().re;
        ClassicalStokes { s0: s(0), s1: s(1), s2: s(2), s3: s(3) }
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant().re
    }

    /// `(lambda_+, lambda_-)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.0.trace().re;
        let det = self.determinant();
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 + disc, tr / 2.0 - disc)
    }
}

fn require_intensity(j: &CoherenceMatrix) -> Result<f64> {
    let tr = j.intensity();
    if tr <= 0.0 {
        return Err(Error::Undefined("zero intensity".into()));
    }
    Ok(tr)
}

/// `(lambda_+ - lambda_-) / (lambda_+ + lambda_-)`, cross-checked against
/// the purity and determinant forms.
pub fn classical_degree(j: &CoherenceMatrix) -> Result<f64> {
    let tr = require_intensity(j)?;
    let (lp, lm) = j.eigenvalues();
    let p = (lp - lm) / (lp + lm);
    // Compared before the square root, where rounding is not amplified near P = 0.
    let tr2 = (j.0 * j.0).trace().re;
    let p2_purity = 2.0 * tr2 / (tr * tr) - 1.0;
    let p2_det = 1.0 - 4.0 * j.determinant() / (tr * tr);
    if (p2_purity - p2_det).abs() > 1e-12 || (p * p - p2_det).abs() > 1e-12 {
        return Err(Error::Undefined(format!("degree forms disagree: {p2_purity} vs {p2_det}")));
    }
    Ok(p)
}

/// `J = I [(1 - P) I/2 + P J_pol]` with `J_pol` a rank-one projector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub degree: f64,
    pub intensity: f64,
    pub polarized: Matrix2<Complex64>,
    pub unpolarized: Matrix2<Complex64>,
}

impl Decomposition {
    pub fn recombine(&self) -> Matrix2<Complex64> {
        (self.unpolarized * Complex64::new(1.0 - self.degree, 0.0) + self.polarized * Complex64::new(self.degree, 0.0))
            * Complex64::new(self.intensity, 0.0)
    }
}

/// Split into polarized and unpolarized parts. Without a polarized part
/// the projector defaults to `|+><+|`.
pub fn decompose(j: &CoherenceMatrix) -> Result<Decomposition> {
    let tr = require_intensity(j)?;
    let p = classical_degree(j)?;
    let s = j.stokes();
    let r = (s.s1 * s.s1 + s.s2 * s.s2 + s.s3 * s.s3).sqrt();
    let n = if r > 1e-15 * s.s0 { [s.s1 / r, s.s2 / r, s.s3 / r] } else { [0.0, 0.0, 1.0] };
    let half = Complex64::new(0.5, 0.0);
    let polarized =
        (pauli(0) + pauli(1) * Complex64::new(n[0], 0.0) + pauli(2) * Complex64::new(n[1], 0.0) + pauli(3) * Complex64::new(n[2], 0.0)) * half;
    Ok(Decomposition { degree: p, intensity: tr, polarized, unpolarized: pauli(0) * half })
}

/// Von Neumann entropy of the intensity-normalized coherence matrix.
pub fn coherence_entropy(j: &CoherenceMatrix) -> Result<f64> {
    let tr = require_intensity(j)?;
    let (lp, lm) = j.eigenvalues();
    Ok([lp / tr, lm / tr].iter().filter(|&&l| l > 0.0).map(|l| -l * l.ln()).sum())
}

/// Entropy written through the degree alone.
pub fn entropy_from_degree(p: f64) -> f64 {
    let a = (1.0 + p) / 2.0;
    let b = (1.0 - p) / 2.0;
    [a, b].iter().filter(|&&l| l > 0.0).map(|l| -l * l.ln()).sum()
}

pub fn mueller_apply(m: &MuellerMatrix, s: &ClassicalStokes) -> ClassicalStokes {
    ClassicalStokes::from_vector(&(m * s.to_vector()))
}
