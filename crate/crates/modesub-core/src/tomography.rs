//! Coherent-state process tomography of single-photon subtraction.
//!
//! A coherent state is an eigenstate of every annihilation operator, so a
//! subtraction leaves it unchanged and the heralding *rate alone* carries
//! all the information: the success probability of a probe with normalized
//! amplitudes b and mean photon number |β|² is
//! κ·|β|²·Σ_ij χ_ij b_i b*_j. The standard probe set (single-mode probes
//! plus balanced real and phase pairs) makes that map invertible; counts are
//! Poisson because the per-pulse click probability is tiny at realistic
//! herald rates.
//!
//! Reconstruction is two-stage: closed-form linear inversion (exact on
//! noiseless data, possibly unphysical under noise), then maximum-likelihood
//! refinement over χ = LL†/tr(LL†) with a lower-triangular L and a jointly
//! fitted rate constant κ, seeded from the physicality projection of the
//! linear estimate.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::chi::{project_to_physical, ChiError, SubtractionMatrix};
use crate::linalg;
use crate::modes::ModeBasis;
use crate::optim::{minimize, LbfgsOptions};
use crate::rng::{record_rng, sample_poisson};

/// Expected-rate ceiling for the count simulator.
pub const RATE_OVERFLOW_GUARD: f64 = 1e9;
const NORM_TOL: f64 = 1e-10;
/// Tolerance when matching recorded probes against the standard set.
const PROBE_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("probe amplitudes are not unit-norm (norm² = {0})")]
    ProbeNorm(f64),
    #[error("mean photon number must be nonnegative, got {0}")]
    NegativeMeanPhotons(f64),
    #[error("kappa must be positive, got {0}")]
    BadKappa(f64),
    #[error("dark rate must be nonnegative, got {0}")]
    BadDarkRate(f64),
    #[error("shots must be at least 1")]
    BadShots,
    #[error("probe dimension {probe} does not match χ dimension {chi}")]
    DimensionMismatch { probe: usize, chi: usize },
    #[error("expected rate {0:.3e} exceeds the overflow guard {RATE_OVERFLOW_GUARD:.0e}")]
    Overflow(f64),
    #[error("records are not the standard probe set: {0}")]
    IncompleteSet(&'static str),
    #[error("no signal above dark counts (κ̂ = {0:.3e})")]
    NoSignal(f64),
    #[error(transparent)]
    Chi(#[from] ChiError),
}

/// One coherent probe: normalized mode amplitudes b and mean photon number
/// |β|² over all modes.
#[derive(Debug, Clone)]
pub struct ProbeSpec {
    b: DVector<Complex64>,
    mean_photons: f64,
}

impl ProbeSpec {
    pub fn new(b: DVector<Complex64>, mean_photons: f64) -> Result<Self, TomographyError> {
        let norm_sq: f64 = b.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(TomographyError::ProbeNorm(norm_sq));
        }
        if !(mean_photons >= 0.0) {
            return Err(TomographyError::NegativeMeanPhotons(mean_photons));
        }
        Ok(Self { b, mean_photons })
    }

    pub fn b(&self) -> &DVector<Complex64> {
        &self.b
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }
}

/// Acquisition parameters of the synthetic detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographySettings {
    /// Counts per shot per unit |β|²·(quadratic form); the experimental
    /// proportionality constant.
    pub kappa: f64,
    /// Dark counts per shot, assumed measured separately.
    pub dark_rate: f64,
    /// Acquisition windows per probe.
    pub shots: u64,
    /// Seed of the counter-based record RNG.
    pub seed: u64,
}

impl TomographySettings {
    pub fn new(kappa: f64, dark_rate: f64, shots: u64, seed: u64) -> Result<Self, TomographyError> {
        if !(kappa > 0.0) {
            return Err(TomographyError::BadKappa(kappa));
        }
        if !(dark_rate >= 0.0) {
            return Err(TomographyError::BadDarkRate(dark_rate));
        }
        if shots == 0 {
            return Err(TomographyError::BadShots);
        }
        Ok(Self { kappa, dark_rate, shots, seed })
    }
}

/// Observed counts for one probe.
#[derive(Debug, Clone)]
pub struct CountRecord {
    pub probe: ProbeSpec,
    pub counts: u64,
    pub shots: u64,
}

/// The d² standard probes at a common mean photon number: single-mode
/// probes e_i first, then for each pair i < j (lexicographic) the balanced
/// real probe (e_i + e_j)/√2 followed by the phase probe (e_i + i·e_j)/√2.
pub fn standard_probe_set(d: usize, mean_photons: f64) -> Vec<ProbeSpec> {
    let inv = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let i_inv = Complex64::new(0.0, 1.0 / 2.0f64.sqrt());
    let mut probes = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut b = DVector::zeros(d);
        b[i] = Complex64::new(1.0, 0.0);
        probes.push(ProbeSpec { b, mean_photons });
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut real = DVector::zeros(d);
            real[i] = inv;
            real[j] = inv;
            probes.push(ProbeSpec { b: real, mean_photons });
            let mut phase = DVector::zeros(d);
            phase[i] = inv;
            phase[j] = i_inv;
            probes.push(ProbeSpec { b: phase, mean_photons });
        }
    }
    probes
}

/// Expected counts over the full acquisition:
/// μ = shots·(κ·|β|²·Σ χ_ij b_i b*_j + dark_rate).
pub fn expected_rate(
    chi: &SubtractionMatrix,
    probe: &ProbeSpec,
    settings: &TomographySettings,
) -> Result<f64, TomographyError> {
    if probe.dim() != chi.dim() {
        return Err(TomographyError::DimensionMismatch { probe: probe.dim(), chi: chi.dim() });
    }
    let q = linalg::subtraction_form(chi.entries(), &probe.b).max(0.0);
    Ok(settings.shots as f64 * (settings.kappa * probe.mean_photons * q + settings.dark_rate))
}

/// Simulates detector counts for each probe: counts ~ Poisson(μ) drawn from
/// a per-record ChaCha stream keyed by (seed, probe index), so records are
/// reproducible and independent of evaluation order.
pub fn simulate_counts(
    chi: &SubtractionMatrix,
    probes: &[ProbeSpec],
    settings: &TomographySettings,
) -> Result<Vec<CountRecord>, TomographyError> {
    let mut records = Vec::with_capacity(probes.len());
    for (m, probe) in probes.iter().enumerate() {
        let mu = expected_rate(chi, probe, settings)?;
        if mu > RATE_OVERFLOW_GUARD {
            return Err(TomographyError::Overflow(mu));
        }
        let mut rng = record_rng(settings.seed, m as u64);
        let counts = sample_poisson(&mut rng, mu);
        records.push(CountRecord { probe: probe.clone(), counts, shots: settings.shots });
    }
    Ok(records)
}

/// Output of the closed-form inversion.
#[derive(Debug, Clone)]
pub struct LinearInversion {
    /// Hermitian estimate of χ; may violate positivity under noise.
    pub raw: DMatrix<Complex64>,
    /// Rate constant recovered from the trace constraint tr χ = 1.
    pub kappa_hat: f64,
}

/// Closed-form inversion of the standard probe set after dark subtraction
/// and shot normalization:
///
///   κ̂      = Σ_i rate(e_i) / |β|²,
///   χ̂_ii   = rate(e_i)/(κ̂|β|²),
///   Re χ̂_ij = rate₊/(κ̂|β|²) − (χ̂_ii + χ̂_jj)/2   (real probe),
///   Im χ̂_ij = rate_i/(κ̂|β|²) − (χ̂_ii + χ̂_jj)/2  (phase probe).
pub fn linear_inversion(
    records: &[CountRecord],
    dark_rate: f64,
) -> Result<LinearInversion, TomographyError> {
    let d = infer_dimension(records)?;
    let x = records[0].probe.mean_photons;
    if !(x > 0.0) {
        return Err(TomographyError::NegativeMeanPhotons(x));
    }
    let reference = standard_probe_set(d, x);
    if records.len() != reference.len() {
        return Err(TomographyError::IncompleteSet("wrong number of records"));
    }
    for (rec, probe) in records.iter().zip(reference.iter()) {
        if (rec.probe.mean_photons - x).abs() > 1e-12 * x.max(1.0) {
            return Err(TomographyError::IncompleteSet("mean photon number not uniform"));
        }
        // rates ignore a global probe phase, so the match does too
        let (mut anchor, mut mag) = (0usize, probe.b[0].norm());
        for (k, z) in probe.b.iter().enumerate().skip(1) {
            if z.norm() > mag {
                anchor = k;
                mag = z.norm();
            }
        }
        let rec_anchor = rec.probe.b[anchor];
        if rec_anchor.norm() < PROBE_MATCH_TOL {
            return Err(TomographyError::IncompleteSet("probe ordering or amplitudes differ"));
        }
        let phase = rec_anchor / Complex64::new(rec_anchor.norm(), 0.0);
        let dev = rec
            .probe
            .b
            .iter()
            .zip(probe.b.iter())
            .fold(0.0f64, |a, (r, p)| a.max((r / phase - p).norm()));
        if dev > PROBE_MATCH_TOL {
            return Err(TomographyError::IncompleteSet("probe ordering or amplitudes differ"));
        }
    }

    let signal: Vec<f64> = records
        .iter()
        .map(|r| r.counts as f64 / r.shots as f64 - dark_rate)
        .collect();
    let kappa_hat: f64 = signal[..d].iter().sum::<f64>() / x;
    if kappa_hat <= 0.0 {
        return Err(TomographyError::NoSignal(kappa_hat));
    }
    let scale = 1.0 / (kappa_hat * x);
    let mut raw = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        raw[(i, i)] = Complex64::new(signal[i] * scale, 0.0);
    }
    let mut m = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let half_diag = (raw[(i, i)].re + raw[(j, j)].re) / 2.0;
            let re = signal[m] * scale - half_diag;
            let im = signal[m + 1] * scale - half_diag;
            m += 2;
            raw[(i, j)] = Complex64::new(re, im);
            raw[(j, i)] = Complex64::new(re, -im);
        }
    }
    Ok(LinearInversion { raw, kappa_hat })
}

fn infer_dimension(records: &[CountRecord]) -> Result<usize, TomographyError> {
    let first = records.first().ok_or(TomographyError::IncompleteSet("no records"))?;
    let d = first.probe.dim();
    if records.iter().any(|r| r.probe.dim() != d) {
        return Err(TomographyError::IncompleteSet("mixed probe dimensions"));
    }
    Ok(d)
}

/// Maximum-likelihood options.
#[derive(Debug, Clone, Copy)]
pub struct MleOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iters: 2000, rel_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct MleDiagnostics {
    pub iterations: usize,
    pub final_nll: f64,
    /// Accepted iterations never increased the negative log-likelihood.
    pub monotone: bool,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub chi: SubtractionMatrix,
    pub kappa_hat: f64,
    pub diagnostics: MleDiagnostics,
}

/// Poisson maximum-likelihood reconstruction over χ = LL†/tr(LL†) with
/// lower-triangular L (d² real parameters) and ln κ fitted jointly,
/// initialized from the physicality projection of the linear inversion.
///
/// `dark_rate` is assumed known and enters the rate additively; it is not
/// fitted. A dataset with zero total counts falls through to the linear
/// inversion, whose no-signal error propagates.
pub fn mle_reconstruct(
    records: &[CountRecord],
    basis: Arc<ModeBasis>,
    dark_rate: f64,
    opts: &MleOptions,
) -> Result<MleResult, TomographyError> {
    let d = infer_dimension(records)?;
    if d != basis.dimension() {
        return Err(TomographyError::DimensionMismatch { probe: d, chi: basis.dimension() });
    }
    let inversion = linear_inversion(records, dark_rate)?;
    let seed_chi = match project_to_physical(&inversion.raw, basis.clone()) {
        Ok(chi) => chi.entries().clone(),
        Err(_) => DMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / d as f64, 0.0)),
    };
    // strictly positive blend keeps every model rate finite at the start
    let blend = 1e-3;
    let start = seed_chi * Complex64::new(1.0 - blend, 0.0)
        + DMatrix::from_diagonal_element(d, d, Complex64::new(blend / d as f64, 0.0));
    let l0 = start
        .clone()
        .cholesky()
        .map(|c| c.unpack())
        .unwrap_or_else(|| DMatrix::from_diagonal_element(d, d, Complex64::new((1.0 / d as f64).sqrt(), 0.0)));

    let n_params = d * d + 1;
    let mut theta0 = DVector::zeros(n_params);
    pack(&l0, inversion.kappa_hat.max(1e-12).ln(), &mut theta0);

    // precomputed per-record pieces
    // the rate pairing Σ T_ij b_i b*_j is the quadratic form at u = conj(b)
    let outers: Vec<DMatrix<Complex64>> =
        records.iter().map(|r| linalg::outer(&r.probe.b.map(|z| z.conj()))).collect();
    let xs: Vec<f64> = records.iter().map(|r| r.probe.mean_photons).collect();
    let shots: Vec<f64> = records.iter().map(|r| r.shots as f64).collect();
    let ks: Vec<f64> = records.iter().map(|r| r.counts as f64).collect();

    let lbfgs_opts = LbfgsOptions {
        max_iters: opts.max_iters,
        rel_tol: opts.rel_tol,
        grad_tol: 1e-12,
        ..Default::default()
    };
    let objective = |theta: &DVector<f64>, grad: &mut DVector<f64>| -> f64 {
        let (l, ln_kappa) = unpack(theta, d);
        let kappa = ln_kappa.exp();
        let t_mat = &l * l.adjoint();
        let trace = linalg::trace_re(&t_mat).max(1e-300);

        let mut nll = 0.0;
        let mut g_kappa = 0.0;
        // G = Σ_m w_m (B_m − q_m I)/trace, accumulated as Σ w_m B_m and Σ w_m q_m
        let mut weighted_outer = DMatrix::<Complex64>::zeros(d, d);
        let mut weighted_q = 0.0;
        for m in 0..records.len() {
            let q = (t_mat.iter().zip(outers[m].iter()).map(|(t, b)| t.conj() * b).sum::<Complex64>()
                .re
                / trace)
                .max(0.0);
            let mu = shots[m] * (kappa * xs[m] * q + dark_rate);
            let k = ks[m];
            if mu <= 0.0 {
                if k > 0.0 {
                    // impossible data under the current model
                    grad.fill(0.0);
                    return f64::INFINITY;
                }
                continue;
            }
            nll += mu - k * mu.ln();
            let g_mu = 1.0 - k / mu; // ∂NLL/∂μ
            let w = g_mu * shots[m] * kappa * xs[m];
            weighted_outer += &outers[m] * Complex64::new(w, 0.0);
            weighted_q += w * q;
            g_kappa += g_mu * shots[m] * kappa * xs[m] * q;
        }
        let mut g_mat = weighted_outer;
        for i in 0..d {
            g_mat[(i, i)] -= Complex64::new(weighted_q, 0.0);
        }
        g_mat /= Complex64::new(trace, 0.0);
        // df = Re tr(G(dL L† + L dL†)) → complex gradient w.r.t. L is 2 G L
        let d_l = (linalg::hermitize(&g_mat) * &l) * Complex64::new(2.0, 0.0);
        pack_grad(&d_l, g_kappa, grad);
        nll
    };

    let result = minimize(objective, theta0, &lbfgs_opts);
    let (l_star, ln_kappa_star) = unpack(&result.x, d);
    let t_mat = &l_star * l_star.adjoint();
    let trace = linalg::trace_re(&t_mat);
    let entries = linalg::hermitize(&t_mat) / Complex64::new(trace, 0.0);
    let chi = SubtractionMatrix::new(entries, basis)?;
    Ok(MleResult {
        chi,
        kappa_hat: ln_kappa_star.exp(),
        diagnostics: MleDiagnostics {
            iterations: result.iterations,
            final_nll: result.f,
            monotone: result.monotone,
            converged: result.converged,
        },
    })
}

/// Parameter layout: [diag(L) (real), (Re, Im) of strict lower triangle
/// column-major, ln κ].
fn pack(l: &DMatrix<Complex64>, ln_kappa: f64, theta: &mut DVector<f64>) {
    let d = l.nrows();
    let mut at = 0;
    for i in 0..d {
        theta[at] = l[(i, i)].re;
        at += 1;
    }
    for j in 0..d {
        for i in (j + 1)..d {
            theta[at] = l[(i, j)].re;
            theta[at + 1] = l[(i, j)].im;
            at += 2;
        }
    }
    theta[at] = ln_kappa;
}

fn unpack(theta: &DVector<f64>, d: usize) -> (DMatrix<Complex64>, f64) {
    let mut l = DMatrix::<Complex64>::zeros(d, d);
    let mut at = 0;
    for i in 0..d {
        l[(i, i)] = Complex64::new(theta[at], 0.0);
        at += 1;
    }
    for j in 0..d {
        for i in (j + 1)..d {
            l[(i, j)] = Complex64::new(theta[at], theta[at + 1]);
            at += 2;
        }
    }
    (l, theta[theta.len() - 1])
}

fn pack_grad(d_l: &DMatrix<Complex64>, g_kappa: f64, grad: &mut DVector<f64>) {
    let d = d_l.nrows();
    let mut at = 0;
    for i in 0..d {
        grad[at] = d_l[(i, i)].re;
        at += 1;
    }
    for j in 0..d {
        for i in (j + 1)..d {
            grad[at] = d_l[(i, j)].re;
            grad[at + 1] = d_l[(i, j)].im;
            at += 2;
        }
    }
    grad[at] = g_kappa;
}
