//! Polarization tomography from moments of projected Stokes operators.
//!
//! The `l`th moment along `n` is `m_l(n) = Tr[(S.n)^l rho]`, and
//! `m_l(n) = sqrt(4 pi/(2S+1)) sum_{K<=l} f_Kl sum_q rho_Kq Y_Kq(n)` with
//! `f_Kl = sum_m m^l C^{Sm}_{Sm,K0}`. Rank `K` is first seen in the `l = K`
//! moments, so ranks are solved one by one after removing lower ones.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::angular::{cg_unchecked, spherical_harmonics_upto, Direction, HalfSpin};
use crate::error::{invalid, Error, Result};
use crate::linalg::trace_product_re;
use crate::multipoles::{kq_index, MultipoleTable};
use crate::states::LayerState;
use crate::stokes::stokes_matrices;
use crate::transforms::displacement;

/// `Tr[(S.n)^l rho]`.
pub fn stokes_moment(layer: &LayerState, n: Direction, ell: usize) -> Result<f64> {
    if ell < 1 {
        return invalid("moment order must be at least 1");
    }
    let g = stokes_matrices(layer.spin()).along(n.to_vector());
    let mut p = g.clone();
    for _ in 1..ell {
        p = &p * &g;
    }
    Ok(trace_product_re(layer.rho(), &p))
}

/// `f_Kl = sum_m m^l C^{Sm}_{Sm,K0}`; zero for `l < K` and for odd `K + l`.
pub fn f_kl(spin: HalfSpin, k: usize, ell: usize) -> f64 {
    if k > spin.twice() as usize || ell < k || (k + ell) % 2 == 1 {
        return 0.0;
    }
    let t = spin.twice() as i64;
    (0..spin.dim())
        .map(|i| {
            let m = spin.m_twice(i);
            (m as f64 / 2.0).powi(ell as i32) * cg_unchecked(t, m, 2 * k as i64, 0, t, m)
        })
        .sum()
}

/// Moment evaluated from multipoles.
pub fn stokes_moment_from_multipoles(table: &MultipoleTable, n: Direction, ell: usize) -> f64 {
    let spin = table.spin;
    let kmax = ell.min(table.max_rank());
    let y = spherical_harmonics_upto(kmax, n);
    let pref = (4.0 * PI / spin.dim() as f64).sqrt();
    (0..=kmax)
        .map(|k| {
            let f = f_kl(spin, k, ell);
            if f == 0.0 {
                return 0.0;
            }
            let ki = k as i64;
            let s: Complex64 = (-ki..=ki).map(|q| table.get(k, q) * y[kq_index(k, q)]).sum();
            pref * f * s.re
        })
        .sum()
}

/// Row of the real design matrix for rank `K`: unknowns are
/// `[rho_K0, Re rho_K1, Im rho_K1, ..., Re rho_KK, Im rho_KK]`.
fn design_row(k: usize, n: Direction) -> Vec<f64> {
    let y = spherical_harmonics_upto(k, n);
    let mut row = Vec::with_capacity(2 * k + 1);
    row.push(y[kq_index(k, 0)].re);
    for q in 1..=k as i64 {
        let v = y[kq_index(k, q)];
        row.push(2.0 * v.re);
        row.push(-2.0 * v.im);
    }
    row
}

fn design_matrix(k: usize, dirs: &[Direction]) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = dirs.iter().map(|&n| design_row(k, n)).collect();
    DMatrix::from_fn(rows.len(), 2 * k + 1, |i, j| rows[i][j])
}

fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Measurement directions for one multipole rank.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    pub rank: usize,
    pub directions: Vec<Direction>,
    /// Condition number of the rank-`K` harmonic design matrix.
    pub condition: f64,
}

/// Largest allowed design condition number.
pub const MAX_CONDITION: f64 = 1e3;
/// Condition number the refinement aims to stay under.
const TARGET_CONDITION: f64 = 1e2;
const DESIGN_ATTEMPTS: u64 = 10;
const REPULSION_STEPS: usize = 500;

fn spiral(n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
    // Golden-angle spiral over the upper hemisphere, randomly turned.
    let golden = PI * (3.0 - 5f64.sqrt());
    let offset = rng.random::<f64>() * 2.0 * PI;
    let tilt = rng.random::<f64>() * 0.3;
    (0..n)
        .map(|i| {
            let z = 1.0 - (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = offset + golden * i as f64;
            let v = [r * a.cos(), r * a.sin(), z];
            // Small tilt about x breaks alignment with the coordinate axes.
            let (s, c) = tilt.sin_cos();
            [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]]
        })
        .collect()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn to_directions(pts: &[[f64; 3]]) -> Vec<Direction> {
    pts.iter().map(|&v| Direction::from_vector(v)).collect()
}

/// One gradient step on `sum_{i<j} (u_i.u_j)^8`, a smooth stand-in for the
/// largest pairwise `|cos|` between lines.
fn repel_step(pts: &[[f64; 3]], step: f64) -> Vec<[f64; 3]> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let mut g = [0.0; 3];
            for j in (0..n).filter(|&j| j != i) {
                let w = 8.0 * dot(&pts[i], &pts[j]).powi(7);
                for a in 0..3 {
                    g[a] += w * pts[j][a];
                }
            }
            let radial = dot(&g, &pts[i]);
            let mut u = pts[i];
            for a in 0..3 {
                u[a] -= step * (g[a] - radial * pts[i][a]);
            }
            normalize(u)
        })
        .collect()
}

/// Repulsion from `start`, keeping the most spread iterate whose rank-`k`
/// design condition stays below [`TARGET_CONDITION`], or failing that the best
/// conditioned one. Symmetric packings can make the harmonic design singular,
/// so the final iterate is not always usable.
fn refine(k: usize, start: Vec<[f64; 3]>) -> (Vec<Direction>, f64) {
    let score = |pts: &[[f64; 3]]| {
        let dirs = to_directions(pts);
        let cond = condition_number(&design_matrix(k, &dirs));
        (min_line_angle(&dirs), cond, dirs)
    };
    let mut spread: Option<(f64, f64, Vec<Direction>)> = None;
    let mut conditioned = score(&start);
    let mut pts = start;
    let mut step = 0.1;
    for i in 0..=REPULSION_STEPS {
        if i > 0 {
            pts = repel_step(&pts, step);
            step *= 0.995;
        }
        let (angle, cond, dirs) = score(&pts);
        if cond <= TARGET_CONDITION && spread.as_ref().is_none_or(|s| angle > s.0) {
            spread = Some((angle, cond, dirs.clone()));
        }
        if cond < conditioned.1 {
            conditioned = (angle, cond, dirs);
        }
    }
    let (_, cond, dirs) = spread.unwrap_or(conditioned);
    (dirs, cond)
}

/// Smallest angle between any two of the lines, in radians.
pub fn min_line_angle(dirs: &[Direction]) -> f64 {
    let v: Vec<[f64; 3]> = dirs.iter().map(|d| d.to_vector()).collect();
    let mut best = PI / 2.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.min(dot(&v[i], &v[j]).abs().min(1.0).acos());
        }
    }
    best
}

/// `2K+1` well-spread directions for rank `K` with a conditioned design matrix.
pub fn design_directions(k: usize, seed: u64) -> Result<DirectionSet> {
    if k < 1 {
        return invalid("rank must be at least 1");
    }
    let n = 2 * k + 1;
    let mut last = f64::INFINITY;
    for attempt in 0..DESIGN_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let (directions, condition) = refine(k, spiral(n, &mut rng));
        if condition <= MAX_CONDITION {
            return Ok(DirectionSet { rank: k, directions, condition });
        }
        last = condition;
    }
    Err(Error::IllConditionedDesign(format!(
        "no rank-{k} design within condition {MAX_CONDITION} after {DESIGN_ATTEMPTS} attempts (last {last:.3e})"
    )))
}

/// One moment measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSample {
    pub direction: Direction,
    pub ell: usize,
    pub value: f64,
}

/// Exact moments `l = 1..=M` of `layer`, order `l` measured on `sets[l-1]`.
pub fn exact_moments(layer: &LayerState, sets: &[DirectionSet]) -> Result<Vec<MomentSample>> {
    let mut out = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        let ell = i + 1;
        for &n in &set.directions {
            out.push(MomentSample { direction: n, ell, value: stokes_moment(layer, n, ell)? });
        }
    }
    Ok(out)
}

/// Direction sets for ranks `1..=M`.
pub fn design_for_order(m: usize, seed: u64) -> Result<Vec<DirectionSet>> {
    (1..=m).map(|k| design_directions(k, seed)).collect()
}

/// Linear inversion of moments up to order `M` (`lambda = 0` for plain least squares).
///
/// The monopole is fixed by unit trace; ranks above `M` are left zero.
pub fn reconstruct_multipoles(moments: &[MomentSample], spin: HalfSpin, m: usize, lambda: f64) -> Result<MultipoleTable> {
    if m < 1 || m > spin.twice() as usize {
        return invalid(format!("order M={m} outside 1..=2S={}", spin.twice()));
    }
    if lambda < 0.0 {
        return invalid("Tikhonov parameter must be non-negative");
    }
    let pref = (4.0 * PI / spin.dim() as f64).sqrt();
    let mut table = MultipoleTable::zeros(spin);
    table.set(0, 0, Complex64::new(1.0 / (spin.dim() as f64).sqrt(), 0.0));
    for k in 1..=m {
        let samples: Vec<&MomentSample> = moments.iter().filter(|s| s.ell == k).collect();
        if samples.len() < 2 * k + 1 {
            return Err(Error::IllConditionedDesign(format!(
                "rank {k} needs at least {} order-{k} moments, got {}",
                2 * k + 1,
                samples.len()
            )));
        }
        let dirs: Vec<Direction> = samples.iter().map(|s| s.direction).collect();
        let fkk = f_kl(spin, k, k);
        let a = design_matrix(k, &dirs) * (pref * fkk);
        let b = DVector::from_iterator(
            samples.len(),
            samples.iter().map(|s| {
                let y = spherical_harmonics_upto(k, s.direction);
                let lower: f64 = (0..k)
                    .filter(|kp| (k - kp) % 2 == 0)
                    .map(|kp| {
                        let ki = kp as i64;
                        let v: Complex64 = (-ki..=ki).map(|q| table.get(kp, q) * y[kq_index(kp, q)]).sum();
                        pref * f_kl(spin, kp, k) * v.re
                    })
                    .sum();
                s.value - lower
            }),
        );
        let x = solve(&a, &b, lambda, k)?;
        table.set(k, 0, Complex64::new(x[0], 0.0));
        for q in 1..=k as i64 {
            let v = Complex64::new(x[2 * q as usize - 1], x[2 * q as usize]);
            table.set(k, q, v);
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            table.set(k, -q, v.conj() * sign);
        }
    }
    table.symmetrize();
    Ok(table)
}

fn solve(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64, k: usize) -> Result<DVector<f64>> {
    if lambda > 0.0 {
        let at = a.transpose();
        let mut n = &at * a;
        for i in 0..n.nrows() {
            n[(i, i)] += lambda;
        }
        return n
            .cholesky()
            .map(|c| c.solve(&(at * b)))
            .ok_or_else(|| Error::IllConditionedDesign(format!("rank-{k} regularized system not positive definite")));
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(Error::IllConditionedDesign(format!("rank-{k} design matrix is singular")));
    }
    svd.solve(b, 0.0).map_err(|e| Error::IllConditionedDesign(e.to_string()))
}

/// Photon-count histogram along one direction; `counts[i]` belongs to `m = S - i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TomogramCounts {
    pub spin: HalfSpin,
    pub direction: Direction,
    pub shots: u64,
    pub counts: Vec<u64>,
}

impl TomogramCounts {
    /// Empirical `l`th moment of `S.n`.
    pub fn moment(&self, ell: usize) -> f64 {
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 * self.spin.m(i).powi(ell as i32))
            .sum();
        s / self.shots as f64
    }
}

/// Outcome probabilities `<S,m| D^dag rho D |S,m>` for a measurement along `n`.
pub fn tomogram_probabilities(layer: &LayerState, n: Direction) -> Vec<f64> {
    let d = displacement(layer.spin(), n);
    let r = d.adjoint() * layer.rho() * d;
    (0..layer.spin().dim()).map(|i| r[(i, i)].re.max(0.0)).collect()
}

/// Multinomial sampling of `shots` detections along `n`.
pub fn simulate_tomograms(layer: &LayerState, n: Direction, shots: u64, seed: u64) -> Result<TomogramCounts> {
    if shots < 1 {
        return invalid("at least one shot is required");
    }
    let p = tomogram_probabilities(layer, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(TomogramCounts { spin: layer.spin(), direction: n, shots, counts: multinomial(shots, &p, &mut rng) })
}

fn multinomial<R: Rng + ?Sized>(shots: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let total: f64 = p.iter().sum();
    let mut left = shots;
    let mut mass = 1.0;
    let mut out = vec![0; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        let pi = pi / total;
        if i + 1 == p.len() {
            out[i] = left;
            break;
        }
        let cond = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, cond).map(|b| b.sample(rng)).unwrap_or(0);
        out[i] = c;
        left -= c;
        mass -= pi;
    }
    out
}

/// Empirical moments `l = 1..=M` from tomograms on each direction.
pub fn sampled_moments(counts: &[TomogramCounts], m: usize) -> Vec<MomentSample> {
    counts
        .iter()
        .flat_map(|c| (1..=m).map(move |ell| MomentSample { direction: c.direction, ell, value: c.moment(ell) }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_f_coefficients() {
        for t in 1..8u32 {
            let spin = HalfSpin::from_twice(t);
            let s = spin.value();
            let f02 = f_kl(spin, 0, 2);
            assert!((f02 - s * (s + 1.0) * (2.0 * s + 1.0) / 3.0).abs() < 1e-10);
            assert_eq!(f_kl(spin, 1, 2), 0.0);
        }
    }
}

