//! Angular-momentum primitives: spin labels, directions, Clebsch-Gordan
//! coefficients, spherical harmonics and Wigner small-d matrices.
//!
//! Half-integers are carried as twice their value so that parity is exact.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Spin label `S`, stored as `2S`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfSpin(u32);

impl HalfSpin {
    pub const ZERO: HalfSpin = HalfSpin(0);

    pub fn from_twice(twice: u32) -> Self {
        HalfSpin(twice)
    }

    /// Integer spin `s`.
    pub fn integer(s: u32) -> Self {
        HalfSpin(2 * s)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }

    /// Twice the projection `m` at basis index `i` (ordering `m = S, S-1, ..., -S`).
    pub fn m_twice(self, i: usize) -> i64 {
        self.0 as i64 - 2 * i as i64
    }

    pub fn m(self, i: usize) -> f64 {
        self.m_twice(i) as f64 / 2.0
    }

    /// Basis index of the projection with twice-value `m_twice`.
    pub fn index_of(self, m_twice: i64) -> Option<usize> {
        let t = self.0 as i64;
        if m_twice.abs() > t || (t - m_twice) % 2 != 0 {
            None
        } else {
            Some(((t - m_twice) / 2) as usize)
        }
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfSpin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// A point on the unit sphere in polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const NORTH: Direction = Direction { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Direction { theta, phi }
    }

    /// Direction of a nonzero vector; the zero vector maps to the north pole.
    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r == 0.0 {
            return Self::NORTH;
        }
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
        Direction { theta, phi }
    }

    pub fn to_vector(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn dot(self, other: Direction) -> f64 {
        let a = self.to_vector();
        let b = other.to_vector();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}

/// Arguments of `C^{JM}_{j1 m1, j2 m2}`, all as twice-values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CgKey {
    pub j1: i64,
    pub m1: i64,
    pub j2: i64,
    pub m2: i64,
    pub j: i64,
    pub m: i64,
}

impl CgKey {
    pub fn new(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> Self {
        CgKey { j1, m1, j2, m2, j, m }
    }
}

// Largest twice-spin for which the exact rational path is used.
const EXACT_TWICE_LIMIT: i64 = 80;
const LN_FACT_LEN: usize = 20_000;

fn big_factorials() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(2 * EXACT_TWICE_LIMIT as usize + 4);
        let mut f = BigInt::one();
        v.push(f.clone());
        for n in 1..=(2 * EXACT_TWICE_LIMIT as usize + 3) {
            f *= n;
            v.push(f.clone());
        }
        v
    })
}

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(LN_FACT_LEN);
        let mut acc = 0.0f64;
        v.push(0.0);
        for n in 1..LN_FACT_LEN {
            acc += (n as f64).ln();
            v.push(acc);
        }
        v
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    let t = ln_factorials();
    if (n as usize) < t.len() {
        t[n as usize]
    } else {
        // Stirling series; the table covers every spin used in practice.
        let x = n as f64 + 1.0;
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
    }
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn check_projection(j: i64, m: i64, what: &str) -> Result<()> {
    if j < 0 {
        return invalid(format!("{what}: negative spin {j}/2"));
    }
    if (j - m).rem_euclid(2) != 0 {
        return invalid(format!("{what}: projection {m}/2 has the wrong parity for spin {j}/2"));
    }
    if m.abs() > j {
        return invalid(format!("{what}: projection {m}/2 out of range for spin {j}/2"));
    }
    Ok(())
}

/// Condon-Shortley Clebsch-Gordan coefficient `C^{JM}_{j1 m1, j2 m2}`.
pub fn clebsch_gordan(key: &CgKey) -> Result<f64> {
    let CgKey { j1, m1, j2, m2, j, m } = *key;
    check_projection(j1, m1, "j1")?;
    check_projection(j2, m2, "j2")?;
    check_projection(j, m, "J")?;
    Ok(cg_unchecked(j1, m1, j2, m2, j, m))
}

struct Racah {
    p: [i64; 12],
    two_j1: i64,
    kmin: i64,
    kmax: i64,
}

fn racah(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> Option<Racah> {
    if m1 + m2 != m || j > j1 + j2 || j < (j1 - j2).abs() || (j1 + j2 + j) % 2 != 0 {
        return None;
    }
    let a = (j1 + j2 - j) / 2;
    let e2 = (j1 - m1) / 2;
    let f1 = (j2 + m2) / 2;
    let h1 = (j - j2 + m1) / 2;
    let h2 = (j - j1 - m2) / 2;
    let p = [
        a,
        (j1 - j2 + j) / 2,
        (-j1 + j2 + j) / 2,
        (j1 + j2 + j) / 2 + 1,
        (j1 + m1) / 2,
        e2,
        f1,
        (j2 - m2) / 2,
        (j + m) / 2,
        (j - m) / 2,
        h1,
        h2,
    ];
    let kmin = 0.max(-h1).max(-h2);
    let kmax = a.min(e2).min(f1);
    (kmin <= kmax).then_some(Racah { p, two_j1: j + 1, kmin, kmax })
}

// Arguments are twice-values already validated for parity and range.
pub(crate) fn cg_unchecked(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    match racah(j1, m1, j2, m2, j, m) {
        None => 0.0,
        Some(r) if j1.max(j2).max(j) <= EXACT_TWICE_LIMIT => cg_exact(r.p, r.two_j1, r.kmin, r.kmax),
        Some(r) => cg_float(r.p, r.two_j1, r.kmin, r.kmax),
    }
}

fn cg_exact(p: [i64; 12], two_j1: i64, kmin: i64, kmax: i64) -> f64 {
    let [a, b, c, d, e1, e2, f1, f2, g1, g2, h1, h2] = p;
    let fact = big_factorials();
    let fa = |n: i64| &fact[n as usize];
    let num = BigInt::from(two_j1) * fa(a) * fa(b) * fa(c) * fa(e1) * fa(e2) * fa(f1) * fa(f2) * fa(g1) * fa(g2);
    let pref = BigRational::new(num, fa(d).clone());
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = fa(k) * fa(a - k) * fa(e2 - k) * fa(f1 - k) * fa(h1 + k) * fa(h2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return 0.0;
    }
    let sign = if sum.is_negative() { -1.0 } else { 1.0 };
    let sq = pref * &sum * &sum;
    sign * sq.to_f64().unwrap_or(f64::NAN).sqrt()
}

fn cg_float(p: [i64; 12], two_j1: i64, kmin: i64, kmax: i64) -> f64 {
    let [a, b, c, d, e1, e2, f1, f2, g1, g2, h1, h2] = p;
    let lf = |n: i64| ln_factorial(n as u64);
    let ln_pref = 0.5
        * ((two_j1 as f64).ln() + lf(a) + lf(b) + lf(c) - lf(d) + lf(e1) + lf(e2) + lf(f1) + lf(f2) + lf(g1)
            + lf(g2));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let ln_den = lf(k) + lf(a - k) + lf(e2 - k) + lf(f1 - k) + lf(h1 + k) + lf(h2 + k);
        let t = (ln_pref - ln_den).exp();
        if k % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    sum
}

/// Orthonormal spherical harmonic `Y_Kq(n)` with the Condon-Shortley phase.
pub fn spherical_harmonic(k: i64, q: i64, n: Direction) -> Result<Complex64> {
    if k < 0 || q.abs() > k {
        return invalid(format!("spherical harmonic needs |q| <= K, got K={k}, q={q}"));
    }
    let qa = q.unsigned_abs() as usize;
    let p = normalized_legendre(k as usize, qa, n.theta.cos(), n.theta.sin());
    let y = Complex64::from_polar(p, qa as f64 * n.phi);
    Ok(if q >= 0 {
        y
    } else if qa % 2 == 0 {
        y.conj()
    } else {
        -y.conj()
    })
}

/// All `Y_Kq(n)` for `0 <= K <= kmax`, indexed by `K*K + K + q`.
pub fn spherical_harmonics_upto(kmax: usize, n: Direction) -> Vec<Complex64> {
    let mut out = vec![Complex64::zero(); (kmax + 1) * (kmax + 1)];
    let (x, s) = (n.theta.cos(), n.theta.sin());
    for q in 0..=kmax {
        let col = legendre_column(kmax, q, x, s);
        let e = Complex64::from_polar(1.0, q as f64 * n.phi);
        for (k, p) in col.into_iter().enumerate().skip(q) {
            let y = e * p;
            out[k * k + k + q] = y;
            if q > 0 {
                let sgn = if q % 2 == 0 { 1.0 } else { -1.0 };
                out[k * k + k - q] = y.conj() * sgn;
            }
        }
    }
    out
}

// Fully normalized associated Legendre value including the Condon-Shortley sign.
fn normalized_legendre(k: usize, q: usize, x: f64, s: f64) -> f64 {
    legendre_column(k, q, x, s)[k]
}

// Returns entries 0..=kmax; only indices >= q are meaningful.
fn legendre_column(kmax: usize, q: usize, x: f64, s: f64) -> Vec<f64> {
    let mut col = vec![0.0; kmax + 1];
    if q > kmax {
        return col;
    }
    let mut pqq = (1.0 / (4.0 * PI)).sqrt();
    for i in 1..=q {
        pqq *= -((2 * i + 1) as f64 / (2 * i) as f64).sqrt() * s;
    }
    col[q] = pqq;
    if q + 1 <= kmax {
        col[q + 1] = x * ((2 * q + 3) as f64).sqrt() * pqq;
    }
    for l in (q + 2)..=kmax {
        let lf = l as f64;
        let qf = q as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - qf * qf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - qf * qf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        col[l] = a * (x * col[l - 1] - b * col[l - 2]);
    }
    col
}

/// Wigner small-d element `d^S_{m' m}(beta)`; projections are twice-values.
pub fn wigner_small_d(spin: HalfSpin, mp_twice: i64, m_twice: i64, beta: f64) -> Result<f64> {
    let j = spin.twice() as i64;
    check_projection(j, mp_twice, "m'")?;
    check_projection(j, m_twice, "m")?;
    let jp = (j + mp_twice) / 2;
    let jmp = (j - mp_twice) / 2;
    let jm = (j + m_twice) / 2;
    let jmm = (j - m_twice) / 2;
    let diff = (mp_twice - m_twice) / 2;
    let (s, c) = (beta / 2.0).sin_cos();
    let kmin = 0.max(-diff);
    let kmax = jm.min(jmp);
    let ln_pref = 0.5 * (ln_factorial(jp as u64) + ln_factorial(jmp as u64) + ln_factorial(jm as u64)
        + ln_factorial(jmm as u64));
    let mut sum = 0.0;
    for k in kmin..=kmax {
        let pc = jm + jmp - 2 * k;
        let ps = 2 * k + diff;
        let ln_den = ln_factorial((jm - k) as u64)
            + ln_factorial(k as u64)
            + ln_factorial((jmp - k) as u64)
            + ln_factorial((k + diff) as u64);
        let mag = (ln_pref - ln_den).exp() * c.powi(pc as i32) * s.powi(ps as i32);
        if (k + diff) % 2 == 0 {
            sum += mag;
        } else {
            sum -= mag;
        }
    }
    Ok(sum)
}
