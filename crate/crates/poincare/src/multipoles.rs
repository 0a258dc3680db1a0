//! Irreducible tensor operators, state multipoles and the cumulative
//! multipole distribution with its degree hierarchy.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{cg_unchecked, ln_factorial, HalfSpin};
use crate::error::{invalid, Result};
use crate::linalg::{c, CMatrix};
use crate::states::{LayerState, PolarizationSector};

/// Flat index of `(K, q)`.
pub fn kq_index(k: usize, q: i64) -> usize {
    ((k * k + k) as i64 + q) as usize
}

/// Tensor operators `T_Kq` of one layer, stored along their single nonzero diagonal.
#[derive(Debug)]
pub struct TensorBasis {
    spin: HalfSpin,
    // For (K, q), entry j sits at row j + max(-q, 0), column j + max(q, 0).
    diags: Vec<Vec<f64>>,
}

impl TensorBasis {
    fn build(spin: HalfSpin) -> Self {
        let d = spin.dim();
        let t = spin.twice() as i64;
        let kmax = spin.twice() as usize;
        let mut diags = vec![Vec::new(); (kmax + 1) * (kmax + 1)];
        for k in 0..=kmax {
            let norm = ((2 * k + 1) as f64 / d as f64).sqrt();
            for q in -(k as i64)..=(k as i64) {
                let len = d - q.unsigned_abs() as usize;
                let (r0, c0) = ((-q).max(0) as usize, q.max(0) as usize);
                let diag = (0..len)
                    .map(|j| {
                        let m = spin.m_twice(j + c0);
                        let mp = spin.m_twice(j + r0);
                        norm * cg_unchecked(t, m, 2 * k as i64, 2 * q, t, mp)
                    })
                    .collect();
                diags[kq_index(k, q)] = diag;
            }
        }
        TensorBasis { spin, diags }
    }

    pub fn spin(&self) -> HalfSpin {
        self.spin
    }

    fn diag(&self, k: usize, q: i64) -> (&[f64], usize, usize) {
        (&self.diags[kq_index(k, q)], (-q).max(0) as usize, q.max(0) as usize)
    }

    /// Dense `T_Kq`.
    pub fn dense(&self, k: usize, q: i64) -> CMatrix {
        let d = self.spin.dim();
        let (diag, r0, c0) = self.diag(k, q);
        let mut m = CMatrix::zeros(d, d);
        for (j, &v) in diag.iter().enumerate() {
            m[(j + r0, j + c0)] = c(v);
        }
        m
    }

    /// `Tr(rho T_Kq^dagger)`.
    pub fn project(&self, rho: &CMatrix, k: usize, q: i64) -> Complex64 {
        let (diag, r0, c0) = self.diag(k, q);
        diag.iter().enumerate().map(|(j, &v)| rho[(j + r0, j + c0)] * v).sum()
    }

    /// `T_Kq^dagger psi` accumulated into `out` with coefficient `coef`.
    pub(crate) fn apply_adjoint_into(&self, k: usize, q: i64, psi: &[Complex64], coef: Complex64, out: &mut [Complex64]) {
        let (diag, r0, c0) = self.diag(k, q);
        for (j, &v) in diag.iter().enumerate() {
            out[j + c0] += coef * v * psi[j + r0];
        }
    }

    /// `T_Kq psi` accumulated into `out` with coefficient `coef`.
    pub(crate) fn apply_into(&self, k: usize, q: i64, psi: &[Complex64], coef: Complex64, out: &mut [Complex64]) {
        let (diag, r0, c0) = self.diag(k, q);
        for (j, &v) in diag.iter().enumerate() {
            out[j + r0] += coef * v * psi[j + c0];
        }
    }

    /// `<psi| T_Kq^dagger |psi>` for an amplitude slice.
    pub(crate) fn pure_multipole(&self, psi: &[Complex64], k: usize, q: i64) -> Complex64 {
        let (diag, r0, c0) = self.diag(k, q);
        diag.iter().enumerate().map(|(j, &v)| psi[j + r0] * psi[j + c0].conj() * v).sum()
    }
}

/// Cached tensor basis for a spin.
pub fn tensor_basis(spin: HalfSpin) -> Arc<TensorBasis> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<TensorBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(b) = cache.read().expect("tensor cache poisoned").get(&spin.twice()) {
        return b.clone();
    }
    let built = Arc::new(TensorBasis::build(spin));
    cache.write().expect("tensor cache poisoned").entry(spin.twice()).or_insert(built).clone()
}

fn check_kq(spin: HalfSpin, k: usize, q: i64) -> Result<()> {
    if k > spin.twice() as usize || q.unsigned_abs() as usize > k {
        return invalid(format!("(K={k}, q={q}) outside 0 <= K <= 2S = {}, |q| <= K", spin.twice()));
    }
    Ok(())
}

/// Dense tensor operator `T_Kq` on layer `S`.
pub fn tensor_operator(spin: HalfSpin, k: usize, q: i64) -> Result<CMatrix> {
    check_kq(spin, k, q)?;
    Ok(tensor_basis(spin).dense(k, q))
}

/// Multipoles `rho_Kq` of a layer state.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipoleTable {
    pub spin: HalfSpin,
    entries: Vec<Complex64>,
}

impl MultipoleTable {
    pub fn zeros(spin: HalfSpin) -> Self {
        let n = spin.twice() as usize + 1;
        MultipoleTable { spin, entries: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn max_rank(&self) -> usize {
        self.spin.twice() as usize
    }

    pub fn get(&self, k: usize, q: i64) -> Complex64 {
        self.entries[kq_index(k, q)]
    }

    pub fn set(&mut self, k: usize, q: i64, v: Complex64) {
        self.entries[kq_index(k, q)] = v;
    }

    /// `sum_q |rho_Kq|^2`.
    pub fn rank_norm_sqr(&self, k: usize) -> f64 {
        let k_i = k as i64;
        (-k_i..=k_i).map(|q| self.get(k, q).norm_sqr()).sum()
    }

    /// Largest violation of `rho_{K,-q} = (-1)^q rho_Kq^*`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=self.max_rank() {
            for q in 0..=k as i64 {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                worst = worst.max((self.get(k, -q) - self.get(k, q).conj() * sign).norm());
            }
        }
        worst
    }

    /// Enforces the Hermiticity relation by averaging each `(q, -q)` pair.
    pub fn symmetrize(&mut self) {
        for k in 0..=self.max_rank() {
            for q in 0..=k as i64 {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let a = self.get(k, q);
                let b = self.get(k, -q);
                let avg = (a + b.conj() * sign) * 0.5;
                self.set(k, q, avg);
                self.set(k, -q, avg.conj() * sign);
            }
        }
    }

    /// `sum_Kq rho_Kq T_Kq`.
    pub fn reconstruct(&self) -> CMatrix {
        let basis = tensor_basis(self.spin);
        let d = self.spin.dim();
        let mut m = CMatrix::zeros(d, d);
        for k in 0..=self.max_rank() {
            for q in -(k as i64)..=(k as i64) {
                let (diag, r0, c0) = basis.diag(k, q);
                let v = self.get(k, q);
                for (j, &t) in diag.iter().enumerate() {
                    m[(j + r0, j + c0)] += v * t;
                }
            }
        }
        m
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..=self.max_rank()).flat_map(move |k| (-(k as i64)..=(k as i64)).map(move |q| (k, q, self.get(k, q))))
    }
}

/// `rho_Kq = Tr(rho T_Kq^dagger)` for all `K <= 2S`.
pub fn multipoles(layer: &LayerState) -> MultipoleTable {
    let spin = layer.spin();
    let basis = tensor_basis(spin);
    let mut t = MultipoleTable::zeros(spin);
    for k in 0..=t.max_rank() {
        for q in -(k as i64)..=(k as i64) {
            t.set(k, q, basis.project(layer.rho(), k, q));
        }
    }
    t
}

/// `A_M = sum_{K=1..M} sum_q |rho_Kq|^2`.
pub fn cumulative_a(layer: &LayerState, m: usize) -> Result<f64> {
    let spin = layer.spin();
    if m < 1 || m > spin.twice() as usize {
        return invalid(format!("order M={m} outside 1..=2S={}", spin.twice()));
    }
    let basis = tensor_basis(spin);
    let mut acc = 0.0;
    for k in 1..=m {
        for q in -(k as i64)..=(k as i64) {
            acc += basis.project(layer.rho(), k, q).norm_sqr();
        }
    }
    Ok(acc)
}

/// Closed-form `A_M` of any SU(2) coherent state, the maximum over the layer.
pub fn cumulative_a_coherent_max(spin: HalfSpin, m: usize) -> Result<f64> {
    let t = spin.twice() as usize;
    if m < 1 || m > t {
        return invalid(format!("order M={m} outside 1..=2S={t}"));
    }
    let lead = t as f64 / (t + 1) as f64;
    if m == t {
        return Ok(lead);
    }
    // Gamma(2S+1)^2 / (Gamma(2S-M) Gamma(2S+M+2))
    let ln_tail = 2.0 * ln_factorial(t as u64) - ln_factorial((t - m - 1) as u64) - ln_factorial((t + m + 1) as u64);
    Ok(lead - ln_tail.exp())
}

/// `C^{SS}_{SS,K0} = sqrt(2S+1) (2S)! / sqrt((2S-K)! (2S+1+K)!)`.
pub fn coherent_cg(spin: HalfSpin, k: usize) -> f64 {
    let t = spin.twice() as u64;
    if k as u64 > t {
        return 0.0;
    }
    let ln = 0.5 * ((t + 1) as f64).ln() + ln_factorial(t)
        - 0.5 * (ln_factorial(t - k as u64) + ln_factorial(t + 1 + k as u64));
    ln.exp()
}

/// Hierarchy degree `P_M = sum_S w_S sqrt(A_M / A_M,SU(2))`; layers with `2S < M` contribute zero.
pub fn degree_hierarchy(sector: &PolarizationSector, m: usize) -> Result<f64> {
    if m < 1 {
        return invalid("hierarchy order must be at least 1");
    }
    let mut acc = 0.0;
    for l in sector.layers() {
        if (l.spin().twice() as usize) < m {
            continue;
        }
        let a = cumulative_a(&l.state, m)?;
        let amax = cumulative_a_coherent_max(l.spin(), m)?;
        acc += l.weight * (a / amax).max(0.0).sqrt();
    }
    Ok(acc)
}

/// Raw second-order value `|3 lambda - 1|` of the spin-1 family `diag(lambda, 1-2lambda, lambda)`.
pub fn lambda_family_p2_raw(lambda: f64) -> f64 {
    (3.0 * lambda - 1.0).abs()
}

/// `sqrt((3P - 1)/2)` from the spin-1 purity `P`.
pub fn p2_from_purity_spin_one(purity: f64) -> f64 {
    ((3.0 * purity - 1.0) / 2.0).max(0.0).sqrt()
}

/// JSON form of a multipole table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultipoleJson {
    pub twice_spin: u32,
    pub entries: Vec<MultipoleEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultipoleEntry {
    #[serde(rename = "K")]
    pub k: usize,
    pub q: i64,
    pub re: f64,
    pub im: f64,
}

impl From<&MultipoleTable> for MultipoleJson {
    fn from(t: &MultipoleTable) -> Self {
        MultipoleJson {
            twice_spin: t.spin.twice(),
            entries: t.entries().map(|(k, q, v)| MultipoleEntry { k, q, re: v.re, im: v.im }).collect(),
        }
    }
}

impl TryFrom<&MultipoleJson> for MultipoleTable {
    type Error = crate::Error;

    fn try_from(j: &MultipoleJson) -> Result<Self> {
        let spin = HalfSpin::from_twice(j.twice_spin);
        let mut t = MultipoleTable::zeros(spin);
        for e in &j.entries {
            check_kq(spin, e.k, e.q)?;
            t.set(e.k, e.q, Complex64::new(e.re, e.im));
        }
        Ok(t)
    }
}
