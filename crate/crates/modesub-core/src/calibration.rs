//! Calibration of the realistic subtractor from rate-vs-intensity data.
//!
//! A click on the herald detector is an accidental event, a single
//! subtraction, or a double subtraction, with weights (w₀, w₁, w₂) on the
//! simplex. Probing the dominant subtraction mode with coherent states of
//! mean photon number x makes the success probability polynomial in x,
//!
//!   rate(x) = κ·(w₀ + w₁ p₀ x + w₂ p₀² x²),
//!
//! so a curve spanning a wide range of x separates the three orders. The
//! mode selectivity p₀ comes from a prior tomography run and is an input
//! here, not a fitted parameter. The fit maximizes the Poisson likelihood
//! over the softmax-parameterized simplex jointly with κ, so the returned
//! weights satisfy the constraint by construction rather than by
//! renormalization.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::optim::{minimize, LbfgsOptions};
use crate::rng::{record_rng, sample_poisson};

const SIMPLEX_TOL: f64 = 1e-10;
/// Minimum ratio x_max/x_min for a usable curve.
const MIN_SPAN: f64 = 10.0 * (1.0 - 1e-9);
/// Reciprocal-condition floor of the observed information below which w₂ is
/// reported unidentifiable.
const RCOND_FLOOR: f64 = 1e-9;
/// Standard-error ceiling on w₂ beyond which it is reported unidentifiable.
const W2_STDERR_CAP: f64 = 5e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("weight {0} outside [0, 1]")]
    WeightRange(f64),
    #[error("weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("curve needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("mean photon numbers must be strictly increasing and positive")]
    NotIncreasing,
    #[error("shots must be at least 1")]
    BadShots,
    #[error("curve spans only a factor {0:.2} in mean photon number (need ≥ 10)")]
    NarrowSpan(f64),
    #[error("selectivity p₀ = {0} outside [0, 1]")]
    BadSelectivity(f64),
    #[error("kappa must be positive, got {0}")]
    BadKappa(f64),
    #[error("rate decreases with intensity (slope {0:.3e}); data does not match the model")]
    ModelMismatch(f64),
    #[error("curve carries no counts")]
    NoSignal,
}

/// Click-origin weights of the realistic subtractor; w₀ + w₁ + w₂ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealisticWeights {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl RealisticWeights {
    pub fn new(w0: f64, w1: f64, w2: f64) -> Result<Self, CalibrationError> {
        for w in [w0, w1, w2] {
            if !(0.0..=1.0).contains(&w) {
                return Err(CalibrationError::WeightRange(w));
            }
        }
        let sum = w0 + w1 + w2;
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(CalibrationError::WeightSum(sum));
        }
        Ok(Self { w0, w1, w2 })
    }
}

/// One calibration point: counts observed over `shots` windows at |β|² = x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mean_photons: f64,
    pub counts: u64,
    pub shots: u64,
}

/// Success counts versus probe intensity, strictly increasing in x.
#[derive(Debug, Clone)]
pub struct CalibrationCurve {
    points: Vec<CurvePoint>,
}

impl CalibrationCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self, CalibrationError> {
        if points.len() < 4 {
            return Err(CalibrationError::TooFewPoints(points.len()));
        }
        let mut prev = 0.0;
        for p in &points {
            if !(p.mean_photons > prev) {
                return Err(CalibrationError::NotIncreasing);
            }
            if p.shots == 0 {
                return Err(CalibrationError::BadShots);
            }
            prev = p.mean_photons;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn span_ratio(&self) -> f64 {
        self.points.last().unwrap().mean_photons / self.points[0].mean_photons
    }
}

/// Herald rate κ·(w₀ + w₁ p₀ x + w₂ p₀² x²) per shot at |β|² = x.
/// Monotone non-decreasing and convex in x for weights on the simplex.
pub fn herald_rate(w: &RealisticWeights, p0: f64, mean_photons: f64, kappa: f64) -> f64 {
    let x = mean_photons;
    kappa * (w.w0 + w.w1 * p0 * x + w.w2 * p0 * p0 * x * x)
}

/// Synthesizes a calibration curve from the rate model; Poisson counts from
/// the counter-based stream (seed, point index), or exact rounded expected
/// counts when `noiseless`.
pub fn synth_curve(
    truth: &RealisticWeights,
    p0: f64,
    kappa: f64,
    xs: &[f64],
    shots: u64,
    seed: u64,
    noiseless: bool,
) -> Result<CalibrationCurve, CalibrationError> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(CalibrationError::BadSelectivity(p0));
    }
    if !(kappa > 0.0) {
        return Err(CalibrationError::BadKappa(kappa));
    }
    let points = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let mu = shots as f64 * herald_rate(truth, p0, x, kappa);
            let counts = if noiseless {
                mu.round() as u64
            } else {
                sample_poisson(&mut record_rng(seed, k as u64), mu)
            };
            CurvePoint { mean_photons: x, counts, shots }
        })
        .collect();
    CalibrationCurve::new(points)
}

/// Result of the constrained Poisson fit.
#[derive(Debug, Clone)]
pub struct WeightFit {
    pub weights: RealisticWeights,
    pub kappa_hat: f64,
    /// Approximate standard errors of (w₀, w₁, w₂) from the observed
    /// information at the optimum.
    pub stderr: [f64; 3],
    /// Set when the information matrix cannot pin the quadratic term
    /// (narrow x-range); ŵ₂ and its stderr are then not meaningful.
    pub w2_unidentifiable: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximum-likelihood weights for a measured curve, given the mode
/// selectivity p₀ from tomography.
pub fn fit_weights(curve: &CalibrationCurve, p0: f64) -> Result<WeightFit, CalibrationError> {
    if !(0.0..=1.0).contains(&p0) {
        return Err(CalibrationError::BadSelectivity(p0));
    }
    let span = curve.span_ratio();
    if span < MIN_SPAN {
        return Err(CalibrationError::NarrowSpan(span));
    }
    let pts = curve.points();
    let total_counts: u64 = pts.iter().map(|p| p.counts).sum();
    if total_counts == 0 {
        return Err(CalibrationError::NoSignal);
    }

    // weighted least-squares slope of the per-shot rate; the model demands
    // a non-decreasing rate
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let x = p.mean_photons;
        let y = p.counts as f64 / p.shots as f64;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if slope < 0.0 {
        return Err(CalibrationError::ModelMismatch(slope));
    }

    // initial point: generic near-ideal weights, κ from the slope
    let kappa0 = if p0 > 0.0 { (slope / p0).max(1e-12) } else { (sy / n).max(1e-12) };

    let xs: Vec<f64> = pts.iter().map(|p| p.mean_photons).collect();
    let shots: Vec<f64> = pts.iter().map(|p| p.shots as f64).collect();
    let cs: Vec<f64> = pts.iter().map(|p| p.counts as f64).collect();

    // Softmax MLE over the active weights; inactive weights are exactly 0.
    // The softmax cannot represent a boundary optimum (e.g. a true w₂ of 0),
    // it only approaches it, so weights driven below threshold get pinned
    // and the reduced model is refit.
    let fit_active = |active: [bool; 3]| -> ([f64; 3], f64, f64, bool, usize) {
        let idx: Vec<usize> = (0..3).filter(|&i| active[i]).collect();
        let np = idx.len();
        let mut theta0 = DVector::zeros(np + 1);
        for (slot, &i) in idx.iter().enumerate() {
            theta0[slot] = [0.05f64, 0.90, 0.05][i].ln();
        }
        theta0[np] = kappa0.ln();

        let objective = |theta: &DVector<f64>, grad: &mut DVector<f64>| -> f64 {
            let (w, kappa) = expand_params(theta, &idx);
            let mut nll = 0.0;
            let mut gw = [0.0f64; 3]; // ∂NLL/∂w_i
            let mut g_lnk = 0.0;
            for k in 0..xs.len() {
                let x = xs[k];
                let basis = [1.0, p0 * x, p0 * p0 * x * x];
                let f: f64 = w.iter().zip(basis.iter()).map(|(wi, bi)| wi * bi).sum();
                let mu = shots[k] * kappa * f;
                if mu <= 0.0 {
                    if cs[k] > 0.0 {
                        grad.fill(0.0);
                        return f64::INFINITY;
                    }
                    continue;
                }
                nll += mu - cs[k] * mu.ln();
                let g_mu = 1.0 - cs[k] / mu;
                for i in 0..3 {
                    gw[i] += g_mu * shots[k] * kappa * basis[i];
                }
                g_lnk += g_mu * mu;
            }
            // chain rule through the softmax: ∂w_i/∂a_j = w_i(δ_ij − w_j)
            let dot: f64 = idx.iter().map(|&i| gw[i] * w[i]).sum();
            for (slot, &j) in idx.iter().enumerate() {
                grad[slot] = w[j] * (gw[j] - dot);
            }
            grad[np] = g_lnk;
            nll
        };
        let opts =
            LbfgsOptions { max_iters: 3000, rel_tol: 1e-12, grad_tol: 1e-12, ..Default::default() };
        let result = minimize(objective, theta0, &opts);
        let (w, kappa) = expand_params(&result.x, &idx);
        (w, kappa, result.f, result.converged, result.iterations)
    };

    let (mut w, mut kappa_hat, mut nll, mut converged, mut iterations) =
        fit_active([true, true, true]);
    const ACTIVE_TOL: f64 = 1e-5;
    for _ in 0..2 {
        let active = [w[0] >= ACTIVE_TOL, w[1] >= ACTIVE_TOL, w[2] >= ACTIVE_TOL];
        if active.iter().all(|&a| a) {
            break;
        }
        let (w_b, kappa_b, nll_b, conv_b, it_b) = fit_active(active);
        if nll_b <= nll + 1e-9 * (1.0 + nll.abs()) {
            w = w_b;
            kappa_hat = kappa_b;
            nll = nll_b;
            converged = conv_b;
            iterations += it_b;
        } else {
            break;
        }
    }
    let _ = nll;

    // observed information in the reduced coordinates (w₁, w₂, ln κ) with
    // w₀ = 1 − w₁ − w₂; μ is linear in the reduced weights, so the Hessian
    // of the NLL is Σ (c/μ²)(∂μ)(∂μ)ᵀ exactly.
    let mut info = DMatrix::<f64>::zeros(3, 3);
    for k in 0..xs.len() {
        let x = xs[k];
        let f = w[0] + w[1] * p0 * x + w[2] * p0 * p0 * x * x;
        let mu = shots[k] * kappa_hat * f;
        if mu <= 0.0 || cs[k] == 0.0 {
            continue;
        }
        let d = [
            shots[k] * kappa_hat * (p0 * x - 1.0),
            shots[k] * kappa_hat * (p0 * p0 * x * x - 1.0),
            mu,
        ];
        let weight = cs[k] / (mu * mu);
        for i in 0..3 {
            for j in 0..3 {
                info[(i, j)] += weight * d[i] * d[j];
            }
        }
    }
    let eig = info.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let lmin = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let rcond = if lmax > 0.0 { lmin / lmax } else { 0.0 };

    let (stderr, invertible) = match info.try_inverse() {
        Some(cov) if rcond > 0.0 => {
            let var_w1 = cov[(0, 0)].max(0.0);
            let var_w2 = cov[(1, 1)].max(0.0);
            let var_w0 = (cov[(0, 0)] + cov[(1, 1)] + 2.0 * cov[(0, 1)]).max(0.0);
            ([var_w0.sqrt(), var_w1.sqrt(), var_w2.sqrt()], true)
        }
        _ => ([f64::INFINITY; 3], false),
    };
    let w2_unidentifiable = !invertible || rcond < RCOND_FLOOR || stderr[2] > W2_STDERR_CAP;

    Ok(WeightFit {
        weights: RealisticWeights::new(w[0], w[1], w[2])?,
        kappa_hat,
        stderr,
        w2_unidentifiable,
        converged,
        iterations,
    })
}

/// Softmax over the active weight slots plus κ; inactive weights are 0.
fn expand_params(theta: &DVector<f64>, idx: &[usize]) -> ([f64; 3], f64) {
    let np = idx.len();
    let m = (0..np).fold(f64::NEG_INFINITY, |a, s| a.max(theta[s]));
    let mut w = [0.0f64; 3];
    let mut sum = 0.0;
    for (slot, &i) in idx.iter().enumerate() {
        let e = (theta[slot] - m).exp();
        w[i] = e;
        sum += e;
    }
    for wi in w.iter_mut() {
        *wi /= sum;
    }
    (w, theta[np].exp())
}
