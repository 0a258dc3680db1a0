//! Husimi Q-functions on the Poincare sphere.
//!
//! With unit-trace layer states and explicit weights, the total function is
//! `Q(n) = sum_S (2S+1) w_S <S,n| rho_S |S,n>`, normalized so that its mean
//! over the sphere is one.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::angular::{spherical_harmonics_upto, Direction, HalfSpin};
use crate::error::{invalid, Result};
use crate::linalg::CVector;
use crate::multipoles::{coherent_cg, kq_index, multipoles, MultipoleTable};
use crate::states::{coherent_amplitudes, LayerState, PolarizationSector};

/// Gauss-Legendre nodes in `cos(theta)` times uniform nodes in `phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereGrid {
    pub thetas: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub phis: Vec<f64>,
}

impl SphereGrid {
    /// Grid exact for products of harmonics up to total degree `2 n_theta - 1`.
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return invalid("grid needs at least one node in each direction");
        }
        let (x, w) = gauss_legendre(n_theta);
        // Nodes come out ascending in cos(theta); list theta ascending instead.
        let thetas = x.iter().rev().map(|v| v.clamp(-1.0, 1.0).acos()).collect();
        let theta_weights = w.into_iter().rev().collect();
        let phis = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Ok(SphereGrid { thetas, theta_weights, phis })
    }

    /// 64 x 128 nodes.
    pub fn default_grid() -> Self {
        Self::new(64, 128).expect("nonzero grid")
    }

    pub fn n_theta(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phis.len()
    }

    pub fn len(&self) -> usize {
        self.n_theta() * self.n_phi()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `k` in theta-major order.
    pub fn node(&self, k: usize) -> Direction {
        Direction::new(self.thetas[k / self.n_phi()], self.phis[k % self.n_phi()])
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.theta_weights[k / self.n_phi()] * 2.0 * PI / self.n_phi() as f64
    }

    /// `int f dn` for samples in theta-major order.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(k, v)| v * self.weight(k)).sum()
    }

    /// `int f Y_Kq^* dn`.
    pub fn project(&self, values: &[f64], kmax: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); (kmax + 1) * (kmax + 1)];
        for (k, &v) in values.iter().enumerate() {
            let y = spherical_harmonics_upto(kmax, self.node(k));
            let w = v * self.weight(k);
            for (o, yy) in out.iter_mut().zip(y) {
                *o += yy.conj() * w;
            }
        }
        out
    }
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
///
/// Golub-Welsch start, then Newton polishing on `P_n` for full precision.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let mut x: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    x.sort_by(|a, b| a.total_cmp(b));
    let mut w = vec![0.0; n];
    for (xi, wi) in x.iter_mut().zip(w.iter_mut()) {
        for _ in 0..3 {
            let (p, dp) = legendre_with_derivative(n, *xi);
            *xi -= p / dp;
        }
        let (_, dp) = legendre_with_derivative(n, *xi);
        *wi = 2.0 / ((1.0 - *xi * *xi) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `<S,n| rho |S,n>`.
pub fn q_layer(layer: &LayerState, n: Direction) -> f64 {
    let v = coherent_amplitudes(layer.spin(), n);
    q_layer_with(layer, &v)
}

fn q_layer_with(layer: &LayerState, v: &CVector) -> f64 {
    match layer.pure_vector() {
        Some(psi) => v.dotc(psi).norm_sqr(),
        None => v.dotc(&(layer.rho() * v)).re,
    }
}

/// Sector Q-function `sum_S (2S+1) w_S Q_S(n)`.
pub fn q_total(sector: &PolarizationSector, n: Direction) -> f64 {
    sector
        .layers()
        .iter()
        .map(|l| (l.spin().dim() as f64) * l.weight * q_layer(&l.state, n))
        .sum()
}

/// Layer Q from its multipoles: `sqrt(4 pi/(2S+1)) sum_Kq C_K rho_Kq Y_Kq(n)`.
pub fn q_layer_from_multipoles(table: &MultipoleTable, n: Direction) -> f64 {
    let kmax = table.max_rank();
    let y = spherical_harmonics_upto(kmax, n);
    (0..=kmax).map(|k| partial_from_table(table, k, &y)).sum()
}

fn partial_from_table(table: &MultipoleTable, k: usize, y: &[Complex64]) -> f64 {
    if k > table.max_rank() {
        return 0.0;
    }
    let spin = table.spin;
    let pref = (4.0 * PI / spin.dim() as f64).sqrt() * coherent_cg(spin, k);
    let ki = k as i64;
    let s: Complex64 = (-ki..=ki).map(|q| table.get(k, q) * y[kq_index(k, q)]).sum();
    pref * s.re
}

/// Rank-`K` component of a single layer's Q-function.
pub fn q_partial_layer(layer: &LayerState, k: usize, n: Direction) -> f64 {
    if k > layer.spin().twice() as usize {
        return 0.0;
    }
    let table = multipoles(layer);
    let y = spherical_harmonics_upto(k, n);
    partial_from_table(&table, k, &y)
}

/// Rank-`K` component of the sector Q-function; the components sum to `q_total`.
pub fn q_partial(sector: &PolarizationSector, k: usize, n: Direction) -> f64 {
    let y = spherical_harmonics_upto(k, n);
    sector
        .layers()
        .iter()
        .filter(|l| l.spin().twice() as usize >= k)
        .map(|l| (l.spin().dim() as f64) * l.weight * partial_from_table(&multipoles(&l.state), k, &y))
        .sum()
}

/// Which Q-function a grid evaluation samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QKind {
    /// Unweighted Q of the sector's layer with this spin.
    Layer(HalfSpin),
    Total,
    Partial(usize),
}

/// Q-function values on a grid, theta-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QSamples {
    pub grid: SphereGrid,
    pub kind: QKind,
    pub values: Vec<f64>,
}

impl QSamples {
    /// Mean over the sphere, `(1/4 pi) int Q dn`.
    pub fn sphere_mean(&self) -> f64 {
        self.grid.integrate(&self.values) / (4.0 * PI)
    }
}

/// Batch evaluation over a grid.
pub fn q_grid(sector: &PolarizationSector, grid: &SphereGrid, kind: QKind) -> Result<QSamples> {
    let values: Vec<f64> = match kind {
        QKind::Layer(spin) => {
            let layer = sector
                .layers()
                .iter()
                .find(|l| l.spin() == spin)
                .ok_or_else(|| crate::Error::InvalidArgument(format!("sector has no layer with spin {spin}")))?;
            (0..grid.len())
                .into_par_iter()
                .map(|k| q_layer(&layer.state, grid.node(k)))
                .collect()
        }
        QKind::Total => (0..grid.len()).into_par_iter().map(|k| q_total(sector, grid.node(k))).collect(),
        QKind::Partial(rank) => {
            let tables: Vec<(f64, MultipoleTable)> = sector
                .layers()
                .iter()
                .filter(|l| l.spin().twice() as usize >= rank)
                .map(|l| (l.spin().dim() as f64 * l.weight, multipoles(&l.state)))
                .collect();
            (0..grid.len())
                .into_par_iter()
                .map(|k| {
                    let y = spherical_harmonics_upto(rank, grid.node(k));
                    tables.iter().map(|(w, t)| w * partial_from_table(t, rank, &y)).sum()
                })
                .collect()
        }
    };
    Ok(QSamples { grid: grid.clone(), kind, values })
}

/// Multipoles recovered from a layer's Q samples via harmonic projection.
pub fn multipoles_from_q(spin: HalfSpin, samples: &[f64], grid: &SphereGrid) -> MultipoleTable {
    let kmax = spin.twice() as usize;
    let proj = grid.project(samples, kmax);
    let mut t = MultipoleTable::zeros(spin);
    let scale = (spin.dim() as f64 / (4.0 * PI)).sqrt();
    for k in 0..=kmax {
        let ck = coherent_cg(spin, k);
        for q in -(k as i64)..=(k as i64) {
            t.set(k, q, proj[kq_index(k, q)] * (scale / ck));
        }
    }
    t
}

/// `[(1 + n.n0)/2]^{2S}`: Q of a coherent layer centred on `n0`.
pub fn coherent_q(spin: HalfSpin, n0: Direction, n: Direction) -> f64 {
    (0.5 * (1.0 + n.dot(n0))).powi(spin.twice() as i32)
}

/// Q of the NOON layer `(|S,S> - |S,-S>)/sqrt 2`.
pub fn noon_q(spin: HalfSpin, n: Direction) -> f64 {
    let t = spin.twice() as i32;
    let (s, c) = (n.theta / 2.0).sin_cos();
    let a = c.powi(2 * t);
    let b = s.powi(2 * t);
    0.5 * (a + b - 2.0 * c.powi(t) * s.powi(t) * (t as f64 * n.phi).cos())
}

/// Sector Q of `|alpha, 0>`: `[1 + |alpha|^2 cos^2(theta/2)] exp(-|alpha|^2 sin^2(theta/2))`.
pub fn single_mode_coherent_q(alpha_abs_sqr: f64, n: Direction) -> f64 {
    let (s, c) = (n.theta / 2.0).sin_cos();
    (1.0 + alpha_abs_sqr * c * c) * (-alpha_abs_sqr * s * s).exp()
}

/// Sector Q of the two-mode squeezed vacuum, `(1 - tanh^2 r sin^2 theta)^{-3/2} / cosh^2 r`.
pub fn tmsv_q(r: f64, n: Direction) -> f64 {
    let t2 = r.tanh().powi(2);
    (1.0 - t2 * n.theta.sin().powi(2)).powf(-1.5) / r.cosh().powi(2)
}
