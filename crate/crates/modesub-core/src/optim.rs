//! Deterministic L-BFGS minimizer with Armijo backtracking.
//!
//! Used for the Poisson likelihood fits in the tomography and calibration
//! modules. Accepted iterates never increase the objective; the caller gets
//! the monotonicity and convergence flags back for its diagnostics.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use nalgebra::DVector;

pub struct LbfgsOptions {
    pub max_iters: usize,
    /// Converged when |Δf| ≤ rel_tol·(1 + |f|) on two consecutive accepted
    /// steps, or the gradient inf-norm falls below grad_tol·(1 + |f|).
    pub rel_tol: f64,
    pub grad_tol: f64,
    pub memory: usize,
    pub armijo_c1: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            rel_tol: 1e-10,
            grad_tol: 1e-10,
            memory: 10,
            armijo_c1: 1e-4,
            max_line_search: 40,
        }
    }
}

pub struct LbfgsResult {
    pub x: DVector<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    /// True when every accepted step decreased the objective (Armijo makes
    /// this structural; recorded for diagnostics).
    pub monotone: bool,
}

/// Minimizes `f` starting from `x0`. The objective closure fills `grad` and
/// returns the value; it must be deterministic.
pub fn minimize<F>(mut objective: F, x0: DVector<f64>, opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&DVector<f64>, &mut DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut grad = DVector::zeros(n);
    let mut f = objective(&x, &mut grad);
    let mut monotone = true;
    let mut converged = false;
    let mut small_steps = 0usize;

    // (s, y, 1/(yᵀs)) pairs, newest last
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();
    let mut iterations = 0usize;

    for _ in 0..opts.max_iters {
        let gnorm = grad.amax();
        if !f.is_finite() {
            break;
        }
        if gnorm <= opts.grad_tol * (1.0 + f.abs()) {
            converged = true;
            break;
        }

        let mut dir = two_loop(&history, &grad);
        let mut descent = dir.dot(&grad);
        if !(descent < 0.0) || !descent.is_finite() {
            // fall back to steepest descent
            dir = -&grad;
            descent = dir.dot(&grad);
            history.clear();
        }

        // backtracking Armijo line search
        let mut step = 1.0f64;
        let mut accepted = false;
        let mut f_new = f;
        let mut x_new = x.clone();
        let mut grad_new = DVector::zeros(n);
        for _ in 0..opts.max_line_search {
            x_new = &x + &dir * step;
            f_new = objective(&x_new, &mut grad_new);
            if f_new.is_finite() && f_new <= f + opts.armijo_c1 * step * descent {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease along the quasi-Newton direction at minimal step:
            // treat as converged-at-precision.
            converged = true;
            break;
        }

        let s = &x_new - &x;
        let y = &grad_new - &grad;
        let ys = y.dot(&s);
        if ys > 1e-12 * s.norm() * y.norm() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / ys));
        }

        let df = f - f_new;
        debug_assert!(df >= 0.0);
        if df < 0.0 {
            monotone = false;
        }
        x = x_new;
        grad = grad_new;
        f = f_new;
        iterations += 1;

        if df <= opts.rel_tol * (1.0 + f.abs()) {
            small_steps += 1;
            if small_steps >= 2 {
                converged = true;
                break;
            }
        } else {
            small_steps = 0;
        }
    }

    LbfgsResult { x, f, iterations, converged, monotone }
}

fn two_loop(history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>, grad: &DVector<f64>) -> DVector<f64> {
    let mut q = grad.clone();
    let mut alphas: Vec<f64> = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = rho * s.dot(&q);
        q -= y * alpha;
        alphas.push(alpha);
    }
    let scale = match history.back() {
        Some((s, y, _)) => {
            let yy = y.dot(y);
            if yy > 0.0 {
                s.dot(y) / yy
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    let mut r = q * scale;
    for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * y.dot(&r);
        r += s * (alpha - beta);
    }
    -r
}
