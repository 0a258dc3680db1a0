//! Scalar degrees of polarization.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multipoles::{coherent_cg, kq_index, multipoles};
use crate::optim::{golden_section, nelder_mead_polished};
use crate::phase_space::{q_total, SphereGrid};
use crate::states::{LayerState, PolarizationSector};
use crate::stokes::{sector_covariance, stokes_mean};
use crate::transforms::euler_unitary;

/// Which degree a report carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeKind {
    Semiclassical,
    Semiclassical2,
    Semiclassical2Invariant,
    HilbertSchmidt,
    Trace,
    Bures,
    Chernoff,
    Husimi,
    Distinguishability,
    Purity,
}

/// A degree value plus whatever auxiliary numbers its evaluation produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub kind: DegreeKind,
    pub value: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, f64>,
}

impl DegreeReport {
    fn new(kind: DegreeKind, value: f64) -> Self {
        DegreeReport { kind, value, metadata: BTreeMap::new() }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.metadata.insert(key.to_string(), v);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemiclassicalVariant {
    /// `|<S>| / <S0>`
    S,
    /// `|<S>| / sqrt(<S^2>)`
    S2,
    /// `sqrt(1 - 3 min_n Var(S_n) / <S^2>)`
    S2Invariant,
}

pub fn semiclassical_degree(sector: &PolarizationSector, variant: SemiclassicalVariant) -> Result<f64> {
    let (s0, mean) = stokes_mean(sector);
    let len = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s_sqr: f64 = sector.layers().iter().map(|l| l.weight * l.spin().value() * (l.spin().value() + 1.0)).sum();
    match variant {
        SemiclassicalVariant::S => {
            if s0 <= 0.0 {
                return Err(Error::Undefined("<S0> = 0".into()));
            }
            Ok(len / s0)
        }
        SemiclassicalVariant::S2 | SemiclassicalVariant::S2Invariant if s_sqr <= 0.0 => {
            Err(Error::Undefined("<S^2> = 0".into()))
        }
        SemiclassicalVariant::S2 => Ok(len / s_sqr.sqrt()),
        SemiclassicalVariant::S2Invariant => {
            let (vmin, _) = sector_covariance(sector).min_direction();
            // Rounding leaves ~1e-16 for states with isotropic variance; its
            // square root would read as a 1e-8 degree.
            let x = 1.0 - 3.0 * vmin / s_sqr;
            Ok(if x < 1e-14 { 0.0 } else { x.sqrt() })
        }
    }
}

/// Distance to the nearest unpolarized sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMetric {
    HilbertSchmidt,
    Trace,
    Bures,
    Chernoff,
}

/// Eigenvalues at or below this are treated as exact zeros.
const EIGEN_FLOOR: f64 = 1e-13;

fn layer_spectrum(layer: &LayerState) -> Vec<f64> {
    let d = layer.spin().dim();
    if layer.is_pure() {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        return v;
    }
    layer.eigenvalues().into_iter().map(|l| if l <= EIGEN_FLOOR { 0.0 } else { l }).collect()
}

fn xi(spectrum: &[f64], t: f64) -> f64 {
    spectrum.iter().filter(|&&l| l > 0.0).map(|l| l.max(1e-300).powf(t)).sum()
}

pub fn distance_degree(sector: &PolarizationSector, metric: DistanceMetric) -> DegreeReport {
    let spectra: Vec<(f64, f64, Vec<f64>)> = sector
        .layers()
        .iter()
        .map(|l| (l.weight, l.spin().dim() as f64, layer_spectrum(&l.state)))
        .collect();
    match metric {
        DistanceMetric::HilbertSchmidt => {
            let v = spectra.iter().map(|(w, d, s)| w * w * (xi(s, 2.0) - 1.0 / d)).sum();
            DegreeReport::new(DegreeKind::HilbertSchmidt, v)
        }
        DistanceMetric::Trace => {
            let v = spectra
                .iter()
                .map(|(w, d, s)| {
                    let m = s.iter().rposition(|&l| l >= 1.0 / d - 1e-15).unwrap_or(0);
                    w * (s[..=m].iter().sum::<f64>() - (m + 1) as f64 / d)
                })
                .sum();
            DegreeReport::new(DegreeKind::Trace, v)
        }
        DistanceMetric::Bures => {
            let f: f64 = spectra.iter().map(|(w, d, s)| w / d * xi(s, 0.5).powi(2)).sum();
            DegreeReport::new(DegreeKind::Bures, 1.0 - f.sqrt())
        }
        DistanceMetric::Chernoff => {
            let objective = |t: f64| chernoff_objective(&spectra, t);
            let (mut t_opt, mut v) = golden_section(objective, 0.0, 1.0, 200, 1e-10);
            for end in [0.0, 1.0] {
                let fe = objective(end);
                if fe < v {
                    v = fe;
                    t_opt = end;
                }
            }
            DegreeReport::new(DegreeKind::Chernoff, 1.0 - v).with("t", t_opt)
        }
    }
}

/// `[sum_S w_S a_S^{1/t}]^t` with `a_S = (2S+1)^{t-1} xi_S(t)`; the `t -> 0`
/// limit is the largest `a_S(0)` among populated layers.
fn chernoff_objective(spectra: &[(f64, f64, Vec<f64>)], t: f64) -> f64 {
    let logs: Vec<(f64, f64)> = spectra
        .iter()
        .filter(|(w, _, _)| *w > 0.0)
        .map(|(w, d, s)| (*w, (t - 1.0) * d.ln() + xi(s, t).ln()))
        .collect();
    let lmax = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    if t < 1e-12 {
        return lmax.exp();
    }
    let sum: f64 = logs.iter().map(|(w, l)| w * ((l - lmax) / t).exp()).sum();
    (lmax + t * sum.ln()).exp()
}

/// Sector-level `sum_S sqrt(2S+1) w_S C_K rho_Kq^{(S)}`, the harmonic
/// coefficients of `Q / sqrt(4 pi)`.
fn q_coefficients(sector: &PolarizationSector) -> Vec<Complex64> {
    let kmax = sector.max_spin().twice() as usize;
    let mut a = vec![Complex64::new(0.0, 0.0); (kmax + 1) * (kmax + 1)];
    for l in sector.layers() {
        let spin = l.spin();
        let table = multipoles(&l.state);
        let pref = (spin.dim() as f64).sqrt() * l.weight;
        for (k, q, v) in table.entries() {
            a[kq_index(k, q)] += v * pref * coherent_cg(spin, k);
        }
    }
    a
}

/// `D_Q = (1/4 pi) int (Q - 1)^2 dn` from multipoles.
pub fn husimi_distance(sector: &PolarizationSector) -> f64 {
    q_coefficients(sector).iter().skip(1).map(|c| c.norm_sqr()).sum()
}

/// The same distance by quadrature on `grid`.
pub fn husimi_distance_grid(sector: &PolarizationSector, grid: &SphereGrid) -> f64 {
    let vals: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| (q_total(sector, grid.node(k)) - 1.0).powi(2))
        .collect();
    grid.integrate(&vals) / (4.0 * PI)
}

/// `P_Q = D_Q / (D_Q + 1)`; with a grid the quadrature value is attached as `d_q_grid`.
pub fn husimi_degree(sector: &PolarizationSector, grid: Option<&SphereGrid>) -> DegreeReport {
    let d = husimi_distance(sector);
    let mut r = DegreeReport::new(DegreeKind::Husimi, d / (d + 1.0)).with("d_q", d);
    if let Some(g) = grid {
        r = r.with("d_q_grid", husimi_distance_grid(sector, g));
    }
    r
}

const EULER_GRID: usize = 24;

/// `sqrt(1 - min_U sum_S w_S Tr(rho U rho U^+) / sum_S w_S Tr rho^2)`.
///
/// The raw `sqrt(1 - min)` is kept as `raw`; it differs only for mixed layers.
/// The minimum comes from a 24^3 Euler-angle scan followed by Nelder-Mead
/// refinement of the best `restarts` cells plus `restarts` seeded random starts.
pub fn distinguishability_degree(sector: &PolarizationSector, restarts: usize, seed: u64) -> DegreeReport {
    let layers: Vec<&crate::states::SectorLayer> = sector.layers().iter().filter(|l| l.spin().twice() > 0).collect();
    let vacuum: f64 = sector.layers().iter().filter(|l| l.spin().twice() == 0).map(|l| l.weight).sum();
    let norm: f64 = vacuum + layers.iter().map(|l| l.weight * l.state.purity()).sum::<f64>();
    let overlap = |x: &[f64]| -> f64 {
        vacuum
            + layers
                .iter()
                .map(|l| {
                    let u = euler_unitary(l.spin(), x[0], x[1], x[2]);
                    let v = match l.state.pure_vector() {
                        Some(psi) => psi.dotc(&(&u * psi)).norm_sqr(),
                        None => {
                            let rho = l.state.rho();
                            let r = &u * rho * u.adjoint();
                            crate::linalg::trace_product_re(rho, &r)
                        }
                    };
                    l.weight * v
                })
                .sum::<f64>()
    };
    let n = EULER_GRID;
    let cells: Vec<[f64; 3]> = (0..n * n * n)
        .map(|i| {
            let (a, b, c) = (i / (n * n), (i / n) % n, i % n);
            [
                2.0 * PI * a as f64 / n as f64,
                PI * (b as f64 + 0.5) / n as f64,
                2.0 * PI * c as f64 / n as f64,
            ]
        })
        .collect();
    let mut scanned: Vec<(f64, usize)> = cells.par_iter().enumerate().map(|(i, x)| (overlap(x), i)).collect();
    scanned.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut starts: Vec<[f64; 3]> = scanned.iter().take(restarts.max(1)).map(|&(_, i)| cells[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        starts.push([rng.random::<f64>() * 2.0 * PI, rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI]);
    }
    let best = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| (nelder_mead_polished(&overlap, x0, 0.2, 1e-15, 2000), i))
        .min_by(|a, b| a.0.value.total_cmp(&b.0.value).then(a.1.cmp(&b.1)))
        .map(|(m, _)| m.value)
        .unwrap_or(norm);
    let min = best.min(scanned[0].0);
    let value = (1.0 - min / norm).max(0.0).sqrt();
    DegreeReport::new(DegreeKind::Distinguishability, value)
        .with("min_overlap", min)
        .with("raw", (1.0 - min).max(0.0).sqrt())
}

/// `sum_{S >= 1/2} w_S [(2S+1) Tr rho^2 - 1] / 2S`.
pub fn purity_degree(sector: &PolarizationSector) -> DegreeReport {
    let v = sector
        .layers()
        .iter()
        .filter(|l| l.spin().twice() > 0)
        .map(|l| {
            let d = l.spin().dim() as f64;
            l.weight * (d * l.state.purity() - 1.0) / (d - 1.0)
        })
        .sum();
    DegreeReport::new(DegreeKind::Purity, v)
}

/// Dispatch by kind with default optimizer settings.
pub fn degree(sector: &PolarizationSector, kind: DegreeKind) -> Result<DegreeReport> {
    Ok(match kind {
        DegreeKind::Semiclassical => {
            DegreeReport::new(kind, semiclassical_degree(sector, SemiclassicalVariant::S)?)
        }
        DegreeKind::Semiclassical2 => {
            DegreeReport::new(kind, semiclassical_degree(sector, SemiclassicalVariant::S2)?)
        }
        DegreeKind::Semiclassical2Invariant => {
            DegreeReport::new(kind, semiclassical_degree(sector, SemiclassicalVariant::S2Invariant)?)
        }
        DegreeKind::HilbertSchmidt => distance_degree(sector, DistanceMetric::HilbertSchmidt),
        DegreeKind::Trace => distance_degree(sector, DistanceMetric::Trace),
        DegreeKind::Bures => distance_degree(sector, DistanceMetric::Bures),
        DegreeKind::Chernoff => distance_degree(sector, DistanceMetric::Chernoff),
        DegreeKind::Husimi => husimi_degree(sector, None),
        DegreeKind::Distinguishability => distinguishability_degree(sector, 8, 0),
        DegreeKind::Purity => purity_degree(sector),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angular::HalfSpin;
    use crate::states::{basis_state, unpolarized};

    #[test]
    fn pure_spin_one_distances() {
        let s = PolarizationSector::single(basis_state(HalfSpin::integer(1), 0).unwrap());
        for m in [DistanceMetric::HilbertSchmidt, DistanceMetric::Trace, DistanceMetric::Chernoff] {
            assert!((distance_degree(&s, m).value - 2.0 / 3.0).abs() < 1e-12, "{m:?}");
        }
        let b = distance_degree(&s, DistanceMetric::Bures).value;
        assert!((b - (1.0 - 1.0 / 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn unpolarized_scores_zero() {
        let s = PolarizationSector::single(unpolarized(HalfSpin::from_twice(3)));
        for m in [DistanceMetric::HilbertSchmidt, DistanceMetric::Trace, DistanceMetric::Bures, DistanceMetric::Chernoff] {
            assert!(distance_degree(&s, m).value.abs() < 1e-12, "{m:?}");
        }
        assert!(husimi_degree(&s, None).value.abs() < 1e-14);
        assert!(purity_degree(&s).value.abs() < 1e-14);
    }
}
