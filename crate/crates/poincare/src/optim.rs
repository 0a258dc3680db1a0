//! Thin wrappers over argmin for the local searches used across the crate.

use std::cell::{Cell, RefCell};

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::LBFGS;

struct Cost<F> {
    f: F,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Cost<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        Ok((self.f)(p))
    }
}

/// Objective with an evaluation budget that remembers the best point it saw.
///
/// The More-Thuente line search inside L-BFGS runs without an iteration cap
/// and can cycle forever on flat or rounding-dominated stretches; exhausting
/// the budget aborts the run and the best point is used instead.
struct CostGrad<'a, F, G> {
    f: F,
    g: G,
    evals: &'a Cell<u64>,
    budget: u64,
    best: &'a RefCell<Minimum>,
}

impl<F: Fn(&[f64]) -> f64, G> CostFunction for CostGrad<'_, F, G> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> Result<f64, argmin::core::Error> {
        let n = self.evals.get() + 1;
        self.evals.set(n);
        if n > self.budget {
            return Err(argmin::core::Error::msg("evaluation budget exhausted"));
        }
        let v = (self.f)(p);
        let mut best = self.best.borrow_mut();
        if v < best.value {
            *best = Minimum { x: p.clone(), value: v };
        }
        Ok(v)
    }
}

impl<F, G: Fn(&[f64]) -> Vec<f64>> Gradient for CostGrad<'_, F, G> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Self::Param) -> Result<Vec<f64>, argmin::core::Error> {
        Ok((self.g)(p))
    }
}

/// Minimum found by a local search.
#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Nelder-Mead from an axis-aligned simplex of size `step` around `x0`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, sd_tol: f64, max_iters: u64) -> Minimum {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut p = x0.to_vec();
        p[i] += step;
        simplex.push(p);
    }
    let fallback = Minimum { x: x0.to_vec(), value: f(x0) };
    let solver = match NelderMead::new(simplex).with_sd_tolerance(sd_tol) {
        Ok(s) => s,
        Err(_) => return fallback,
    };
    match Executor::new(Cost { f }, solver).configure(|s| s.max_iters(max_iters)).run() {
        Ok(res) => {
            let st = res.state();
            match st.get_best_param() {
                Some(x) if st.get_best_cost() <= fallback.value => Minimum { x: x.clone(), value: st.get_best_cost() },
                _ => fallback,
            }
        }
        Err(_) => fallback,
    }
}

/// Repeated Nelder-Mead restarts from the previous optimum until no further gain.
pub fn nelder_mead_polished(
    f: impl Fn(&[f64]) -> f64 + Copy,
    x0: &[f64],
    step: f64,
    sd_tol: f64,
    max_iters: u64,
) -> Minimum {
    let mut best = nelder_mead(f, x0, step, sd_tol, max_iters);
    let mut s = step;
    for _ in 0..6 {
        s *= 0.25;
        let next = nelder_mead(f, &best.x, s, sd_tol, max_iters);
        let gain = best.value - next.value;
        if next.value < best.value {
            best = next;
        }
        if gain <= sd_tol {
            break;
        }
    }
    best
}

/// Cost evaluations allowed per L-BFGS iteration, line search included.
const EVALS_PER_ITER: u64 = 50;

/// L-BFGS with a More-Thuente line search; on a line-search failure or an
/// exhausted evaluation budget the best point reached so far is returned.
pub fn lbfgs(f: impl Fn(&[f64]) -> f64, g: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], max_iters: u64) -> Minimum {
    let best = RefCell::new(Minimum { x: x0.to_vec(), value: f(x0) });
    let evals = Cell::new(0);
    let ls = MoreThuenteLineSearch::new();
    let solver = LBFGS::new(ls, 8);
    let Ok(solver) = solver.with_tolerance_grad(1e-15).and_then(|s| s.with_tolerance_cost(1e-16)) else {
        return best.into_inner();
    };
    let problem = CostGrad { f, g, evals: &evals, budget: max_iters.saturating_mul(EVALS_PER_ITER), best: &best };
    if let Ok(res) = Executor::new(problem, solver).configure(|s| s.param(x0.to_vec()).max_iters(max_iters)).run() {
        let st = res.state();
        if let Some(x) = st.get_best_param() {
            if st.get_best_cost() < best.borrow().value {
                *best.borrow_mut() = Minimum { x: x.clone(), value: st.get_best_cost() };
            }
        }
    }
    best.into_inner()
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if (b - a).abs() < tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
