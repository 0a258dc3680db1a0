//! Stokes operators per layer and their first- and second-order statistics.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::angular::{Direction, HalfSpin};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, trace_product, trace_product_re, CMatrix, CVector, I};
use crate::optim::nelder_mead_polished;
use crate::states::{LayerState, PolarizationSector};

/// `S0..S3` on one layer, plus the ladder operator `S+ = S1 + i S2` and all products `S_k S_l`.
#[derive(Clone, Debug)]
pub struct StokesMatrices {
    pub spin: HalfSpin,
    pub s0: CMatrix,
    pub s1: CMatrix,
    pub s2: CMatrix,
    pub s3: CMatrix,
    pub s_plus: CMatrix,
    products: [[CMatrix; 3]; 3],
}

impl StokesMatrices {
    fn build(spin: HalfSpin) -> Self {
        let d = spin.dim();
        let s = spin.value();
        let mut s_plus = CMatrix::zeros(d, d);
        // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>, and |m+1> sits one row above |m>.
        for col in 1..d {
            let m = spin.m(col);
            s_plus[(col - 1, col)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
        let s_minus = s_plus.adjoint();
        let s1 = (&s_plus + &s_minus) * c(0.5);
        let s2 = (&s_plus - &s_minus) * (-I * 0.5);
        let s3 = CMatrix::from_fn(d, d, |r, col| if r == col { c(spin.m(r)) } else { c(0.0) });
        let s0 = CMatrix::identity(d, d) * c(s);
        let ops = [&s1, &s2, &s3];
        let products = std::array::from_fn(|k| std::array::from_fn(|l| ops[k] * ops[l]));
        StokesMatrices { spin, s0, s1: s1.clone(), s2: s2.clone(), s3, s_plus, products }
    }

    /// `S_k` for `k = 1, 2, 3`.
    pub fn component(&self, k: usize) -> &CMatrix {
        match k {
            1 => &self.s1,
            2 => &self.s2,
            3 => &self.s3,
            _ => panic!("Stokes component index must be 1, 2 or 3"),
        }
    }

    /// `n . S` for a (not necessarily unit) vector `n`.
    pub fn along(&self, n: [f64; 3]) -> CMatrix {
        &self.s1 * c(n[0]) + &self.s2 * c(n[1]) + &self.s3 * c(n[2])
    }

    /// `S_k S_l`, zero-based indices.
    pub fn product(&self, k: usize, l: usize) -> &CMatrix {
        &self.products[k][l]
    }
}

/// Cached Stokes matrices for a spin.
pub fn stokes_matrices(spin: HalfSpin) -> Arc<StokesMatrices> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<StokesMatrices>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(m) = cache.read().expect("stokes cache poisoned").get(&spin.twice()) {
        return m.clone();
    }
    let built = Arc::new(StokesMatrices::build(spin));
    cache.write().expect("stokes cache poisoned").entry(spin.twice()).or_insert(built).clone()
}

/// `<S>` on a single layer.
pub fn layer_mean(layer: &LayerState) -> [f64; 3] {
    let m = stokes_matrices(layer.spin());
    [1, 2, 3].map(|k| trace_product_re(layer.rho(), m.component(k)))
}

/// `(<S0>, <S>)` averaged over the sector.
pub fn stokes_mean(sector: &PolarizationSector) -> (f64, [f64; 3]) {
    let mut s0 = 0.0;
    let mut v = [0.0; 3];
    for l in sector.layers() {
        s0 += l.weight * l.spin().value();
        let lm = layer_mean(&l.state);
        for k in 0..3 {
            v[k] += l.weight * lm[k];
        }
    }
    (s0, v)
}

/// Symmetrized covariance matrix of `(S1, S2, S3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix(pub Matrix3<f64>);

impl CovarianceMatrix {
    pub fn variance_along(&self, n: [f64; 3]) -> f64 {
        let v = Vector3::from(n);
        (v.transpose() * self.0 * v)[(0, 0)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Smallest eigenvalue and a deterministic unit eigenvector.
    ///
    /// Within a degenerate eigenspace the projection of the first Cartesian
    /// axis with non-negligible overlap is used; the largest component is made positive.
    pub fn min_direction(&self) -> (f64, [f64; 3]) {
        let eig = SymmetricEigen::new(self.0);
        let mut idx: Vec<usize> = (0..3).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let lmin = eig.eigenvalues[idx[0]];
        let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        let space: Vec<Vector3<f64>> = idx
            .iter()
            .filter(|&&i| (eig.eigenvalues[i] - lmin).abs() <= 1e-10 * scale)
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let mut chosen = space[0];
        if space.len() > 1 {
            for axis in 0..3 {
                let mut e = Vector3::zeros();
                e[axis] = 1.0;
                let proj: Vector3<f64> = space.iter().map(|u| u * u.dot(&e)).sum();
                if proj.norm() > 1e-6 {
                    chosen = proj.normalize();
                    break;
                }
            }
        }
        let mut imax = 0;
        for i in 1..3 {
            if chosen[i].abs() > chosen[imax].abs() + 1e-12 {
                imax = i;
            }
        }
        if chosen[imax] < 0.0 {
            chosen = -chosen;
        }
        (lmin, [chosen[0], chosen[1], chosen[2]])
    }
}

/// `Lambda_kl = <{S_k, S_l}>/2 - <S_k><S_l>` on one layer.
pub fn stokes_covariance(layer: &LayerState) -> CovarianceMatrix {
    let m = stokes_matrices(layer.spin());
    let mean = layer_mean(layer);
    CovarianceMatrix(Matrix3::from_fn(|k, l| trace_product_re(layer.rho(), m.product(k, l)) - mean[k] * mean[l]))
}

/// Covariance of the Stokes operators over the whole sector.
pub fn sector_covariance(sector: &PolarizationSector) -> CovarianceMatrix {
    let (_, mean) = stokes_mean(sector);
    let mut second = Matrix3::zeros();
    for l in sector.layers() {
        let m = stokes_matrices(l.spin());
        second += Matrix3::from_fn(|k, j| trace_product_re(l.state.rho(), m.product(k, j))) * l.weight;
    }
    CovarianceMatrix(Matrix3::from_fn(|k, l| second[(k, l)] - mean[k] * mean[l]))
}

/// Direction of least Stokes variance and the variance there.
pub fn min_variance_direction(layer: &LayerState) -> (f64, Direction) {
    let (l, v) = stokes_covariance(layer).min_direction();
    (l, Direction::from_vector(v))
}

fn perpendicular_min_variance(cov: &CovarianceMatrix, mean: [f64; 3]) -> f64 {
    let n = Vector3::from(mean).normalize();
    let trial = if n[0].abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (trial - n * n.dot(&trial)).normalize();
    let w = n.cross(&u);
    let a = Matrix2::new(
        (u.transpose() * cov.0 * u)[(0, 0)],
        (u.transpose() * cov.0 * w)[(0, 0)],
        (w.transpose() * cov.0 * u)[(0, 0)],
        (w.transpose() * cov.0 * w)[(0, 0)],
    );
    SymmetricEigen::new(a).eigenvalues.min()
}

/// Kitagawa-Ueda and Wineland squeezing parameters `(xi_S^2, xi_R^2)`.
pub fn squeezing_parameters(layer: &LayerState) -> Result<(f64, f64)> {
    let s = layer.spin().value();
    if s == 0.0 {
        return Err(Error::Undefined("squeezing parameters need S > 0".into()));
    }
    let mean = layer_mean(layer);
    let len2 = mean.iter().map(|x| x * x).sum::<f64>();
    if len2 < 1e-24 {
        return Err(Error::Undefined("mean Stokes vector vanishes; the mean direction is undefined".into()));
    }
    let vmin = perpendicular_min_variance(&stokes_covariance(layer), mean);
    Ok((2.0 / s * vmin, 2.0 * s * vmin / len2))
}

/// Polarization squeezing: some direction in the dark plane has variance
/// below the coherent-state level `|<S>|/2`.
pub fn squeezed(layer: &LayerState) -> Result<bool> {
    let mean = layer_mean(layer);
    let len = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len < 1e-12 {
        return Err(Error::Undefined("mean Stokes vector vanishes; no dark plane".into()));
    }
    let vmin = perpendicular_min_variance(&stokes_covariance(layer), mean);
    Ok(vmin < len / 2.0 - 1e-12)
}

/// `Var(n . S)` on one layer.
pub fn variance_along(layer: &LayerState, n: Direction) -> f64 {
    stokes_covariance(layer).variance_along(n.to_vector())
}

/// Stokes axis label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    S1,
    S2,
    S3,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::S1 => 1,
            Axis::S2 => 2,
            Axis::S3 => 3,
        }
    }
}

const PLANAR_RESTARTS: u64 = 50;
const PLANAR_SEED: u64 = 0x5eed_57;

/// Minimum of `Var(S_k) + Var(S_l)` over pure states of the layer.
pub fn planar_uncertainty_min(spin: HalfSpin, k: Axis, l: Axis) -> Result<f64> {
    if k == l {
        return invalid("planar uncertainty needs two distinct axes");
    }
    let m = stokes_matrices(spin);
    let (a, b) = (m.component(k.index()).clone(), m.component(l.index()).clone());
    let sq = &a * &a + &b * &b;
    let d = spin.dim();
    // Parameters: Re psi_0, then (Re, Im) of psi_1..psi_{d-1}; psi_0 is kept real.
    let to_vec = |x: &[f64]| {
        let mut v = CVector::zeros(d);
        v[0] = c(x[0]);
        for i in 1..d {
            v[i] = Complex64::new(x[2 * i - 1], x[2 * i]);
        }
        v
    };
    let cost = |x: &[f64]| {
        let v = to_vec(x);
        let n2 = v.norm_squared();
        if n2 < 1e-300 {
            return f64::MAX;
        }
        let e = |op: &CMatrix| v.dotc(&(op * &v)).re / n2;
        e(&sq) - e(&a).powi(2) - e(&b).powi(2)
    };
    let best = (0..PLANAR_RESTARTS)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(PLANAR_SEED.wrapping_add(r));
            let x0: Vec<f64> = (0..2 * d - 1).map(|_| StandardNormal.sample(&mut rng)).collect();
            let res = nelder_mead_polished(&cost, &x0, 0.3, 1e-13, 20_000);
            (r, res.value)
        })
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
        .map(|(_, v)| v)
        .unwrap_or(f64::NAN);
    Ok(best)
}

/// Intensity distinguishability, visibility, degree and mode correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complementarity {
    pub d: f64,
    pub v: f64,
    pub p: f64,
    pub g: Complex64,
}

fn complementarity_from(n_plus: f64, n_minus: f64, s_plus: Complex64) -> Result<Complementarity> {
    let total = n_plus + n_minus;
    if total <= 1e-300 {
        return Err(Error::Undefined("complementarity needs a nonzero photon number".into()));
    }
    let prod = n_plus * n_minus;
    let g = if prod > 0.0 { s_plus / prod.sqrt() } else { Complex64::new(0.0, 0.0) };
    let d = (n_plus - n_minus).abs() / total;
    let v = 2.0 * prod.sqrt() * g.norm() / total;
    let p = (1.0 - 4.0 * prod * (1.0 - g.norm_sqr()) / (total * total)).max(0.0).sqrt();
    Ok(Complementarity { d, v, p, g })
}

/// Complementarity triple of a single layer, with `N+- = S0 +- S3`.
pub fn complementarity_layer(layer: &LayerState) -> Result<Complementarity> {
    let m = stokes_matrices(layer.spin());
    let s0 = layer.spin().value();
    let s3 = trace_product_re(layer.rho(), &m.s3);
    let sp = trace_product(layer.rho(), &m.s_plus);
    complementarity_from(s0 + s3, s0 - s3, sp)
}

/// Complementarity triple of a sector.
pub fn complementarity(sector: &PolarizationSector) -> Result<Complementarity> {
    let mut s0 = 0.0;
    let mut s3 = 0.0;
    let mut sp = Complex64::new(0.0, 0.0);
    for l in sector.layers() {
        let m = stokes_matrices(l.spin());
        s0 += l.weight * l.spin().value();
        s3 += l.weight * trace_product_re(l.state.rho(), &m.s3);
        sp += trace_product(l.state.rho(), &m.s_plus) * l.weight;
    }
    complementarity_from(s0 + s3, s0 - s3, sp)
}
