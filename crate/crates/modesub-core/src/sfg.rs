//! Sum-frequency-generation subtractor model.
//!
//! A strong gate beam and the input beam generate an up-converted photon
//! whose detection heralds the subtraction. Energy conservation fixes the
//! gate frequency at ω_gate = ω_up − ω_in, so the gate spectrum is mapped
//! onto the input axis *wavelength-inverted* about the center — the origin
//! of the (−1)ⁿ sign rule for Hermite-Gaussian gates. The two-frequency
//! transfer function
//!
//!   K(λ_in, λ_up) ∝ G(ω_up − ω_in) · Φ(ω_up) · F(ω_up)
//!
//! combines the gate superposition G, a Gaussian phase-matching envelope Φ
//! (group-velocity-matched geometry: a function of ω_up alone), and the
//! Gaussian bandpass F of the up-converted filter. Its Schmidt decomposition
//! yields the annihilation-operator mixture of the induced subtraction; the
//! leading weight p₀ is the mode selectivity.
//!
//! Envelope widths are quoted as *intensity* FWHM (datasheet convention), so
//! amplitudes carry exp(−δ²/(4σ²)) with σ = FWHM/(2√(2 ln 2)).

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chi::{chi_from_mixture, AnnihilationOp, ChiError, OperatorMixture, SubtractionMatrix};
use crate::modes::{make_hg_mode, FrequencyGrid, ModeBasis, ModeError, SpectralMode};

/// Default gate parameters: HG modes centered at 795 nm with a 4 nm
/// intensity FWHM for HG0.
pub const DEFAULT_GATE_CENTER_NM: f64 = 795.0;
pub const DEFAULT_GATE_FWHM_NM: f64 = 4.0;
/// Default up-converted bandpass FWHM.
pub const DEFAULT_FILTER_FWHM_NM: f64 = 0.4;
/// Default effective phase-matching FWHM along the up-converted axis.
pub const DEFAULT_PM_FWHM_NM: f64 = 1.0;
/// Default up-conversion center (sum frequency of two 795 nm photons).
pub const DEFAULT_UP_CENTER_NM: f64 = 397.5;
/// Default number of Schmidt terms retained.
pub const DEFAULT_N_KEEP: usize = 8;
/// Residual Schmidt weight above which a truncation warning is raised.
pub const RESIDUAL_WARN: f64 = 0.01;
/// Dominant-mode projection leakage above which the basis is rejected.
pub const DOMINANT_LEAKAGE_LIMIT: f64 = 0.05;
/// Minimum number of up-grid samples across the filter FWHM.
const MIN_SAMPLES_PER_FILTER: f64 = 8.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SfgError {
    #[error("gate superposition is empty")]
    EmptyGate,
    #[error("gate coefficients are not unit-norm (norm² = {0})")]
    GateNorm(f64),
    #[error("gate modes live on different grids")]
    GateGridMismatch,
    #[error("{0} must be positive")]
    NonPositiveWidth(&'static str),
    #[error("up-grid resolves only {samples:.1} samples across the {filter_fwhm_nm} nm filter (need ≥ 8)")]
    Resolution { filter_fwhm_nm: f64, samples: f64 },
    #[error("transfer function is not normalized (Σ|K|²ΔΔ = {0})")]
    NotNormalized(f64),
    #[error("transfer function has no weight inside the grids")]
    DegenerateKernel,
    #[error("n_keep must be at least 1")]
    InvalidKeep,
    #[error("dominant Schmidt mode leaks {leakage:.4} of its weight outside the basis span (limit {limit})")]
    BasisCoverage { leakage: f64, limit: f64 },
    #[error("basis grid does not match the transfer-function input grid")]
    BasisGridMismatch,
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Chi(#[from] ChiError),
}

/// Configuration of the SFG subtractor.
#[derive(Debug, Clone)]
pub struct SfgConfig {
    /// Gate superposition as (coefficient, mode) terms; coefficients are
    /// unit-norm, modes share one grid.
    pub gate: Vec<(Complex64, SpectralMode)>,
    /// Intensity FWHM of the up-converted bandpass filter.
    pub filter_fwhm_nm: f64,
    /// Effective intensity FWHM of the phase-matching envelope along ω_up.
    pub pm_fwhm_nm: f64,
    /// Center of the up-converted band.
    pub up_center_nm: f64,
    pub in_grid: FrequencyGrid,
    pub up_grid: FrequencyGrid,
}

impl SfgConfig {
    pub fn new(
        gate: Vec<(Complex64, SpectralMode)>,
        filter_fwhm_nm: f64,
        pm_fwhm_nm: f64,
        up_center_nm: f64,
        in_grid: FrequencyGrid,
        up_grid: FrequencyGrid,
    ) -> Result<Self, SfgError> {
        if gate.is_empty() {
            return Err(SfgError::EmptyGate);
        }
        let g0 = *gate[0].1.grid();
        if gate.iter().any(|(_, m)| *m.grid() != g0) {
            return Err(SfgError::GateGridMismatch);
        }
        let norm_sq: f64 = gate.iter().map(|(c, _)| c.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(SfgError::GateNorm(norm_sq));
        }
        if !(filter_fwhm_nm > 0.0) {
            return Err(SfgError::NonPositiveWidth("filter_fwhm_nm"));
        }
        if !(pm_fwhm_nm > 0.0) {
            return Err(SfgError::NonPositiveWidth("pm_fwhm_nm"));
        }
        Ok(Self { gate, filter_fwhm_nm, pm_fwhm_nm, up_center_nm, in_grid, up_grid })
    }

    /// Gate made of Hermite-Gaussian modes on the default input grid with
    /// the default widths and filters.
    pub fn hg_gate(terms: &[(usize, Complex64)]) -> Result<Self, SfgError> {
        let in_grid = FrequencyGrid::default_input();
        let gate = terms
            .iter()
            .map(|&(order, coeff)| {
                make_hg_mode(order, DEFAULT_GATE_CENTER_NM, DEFAULT_GATE_FWHM_NM, &in_grid)
                    .map(|m| (coeff, m))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(
            gate,
            DEFAULT_FILTER_FWHM_NM,
            DEFAULT_PM_FWHM_NM,
            DEFAULT_UP_CENTER_NM,
            in_grid,
            FrequencyGrid::default_upconverted(),
        )
    }

    /// The paper's default operating point: a pure HG0 gate.
    pub fn default_hg0() -> Self {
        Self::hg_gate(&[(0, Complex64::new(1.0, 0.0))]).expect("default configuration is valid")
    }
}

/// Normalized two-frequency transfer function on (in_grid × up_grid);
/// rows index the input wavelength.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    values: DMatrix<Complex64>,
    in_grid: FrequencyGrid,
    up_grid: FrequencyGrid,
}

impl TransferFunction {
    pub fn new(
        values: DMatrix<Complex64>,
        in_grid: FrequencyGrid,
        up_grid: FrequencyGrid,
    ) -> Result<Self, SfgError> {
        let total: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>()
            * in_grid.step_nm()
            * up_grid.step_nm();
        if (total - 1.0).abs() > 1e-8 {
            return Err(SfgError::NotNormalized(total));
        }
        Ok(Self { values, in_grid, up_grid })
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn in_grid(&self) -> &FrequencyGrid {
        &self.in_grid
    }

    pub fn up_grid(&self) -> &FrequencyGrid {
        &self.up_grid
    }

    /// Input-marginal intensity Σ_j |K(λ_in, λ_up_j)|² Δλ_up.
    pub fn input_marginal(&self) -> DVector<f64> {
        let step = self.up_grid.step_nm();
        DVector::from_iterator(
            self.values.nrows(),
            self.values.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() * step),
        )
    }
}

/// Builds the transfer function K(λ_in, λ_up) ∝ G(ω_up − ω_in)·Φ(ω_up)·F(ω_up).
pub fn build_transfer(cfg: &SfgConfig) -> Result<TransferFunction, SfgError> {
    let up_step = cfg.up_grid.step_nm();
    let samples = cfg.filter_fwhm_nm / up_step;
    if samples < MIN_SAMPLES_PER_FILTER {
        return Err(SfgError::Resolution { filter_fwhm_nm: cfg.filter_fwhm_nm, samples });
    }

    // gate superposition on its own grid
    let gate_grid = *cfg.gate[0].1.grid();
    let mut gate_amp = DVector::<Complex64>::zeros(gate_grid.n_points());
    for (coeff, mode) in &cfg.gate {
        gate_amp += mode.amplitude() * *coeff;
    }
    let gate = SpectralMode::normalized(gate_grid, gate_amp)?;

    // Gaussian envelopes along the up-converted axis, intensity-FWHM widths
    let four_sigma_sq = |fwhm: f64| {
        let sigma = fwhm / (2.0 * (2.0 * 2.0f64.ln()).sqrt());
        4.0 * sigma * sigma
    };
    let pm_denom = four_sigma_sq(cfg.pm_fwhm_nm);
    let filt_denom = four_sigma_sq(cfg.filter_fwhm_nm);
    let envelope: Vec<f64> = (0..cfg.up_grid.n_points())
        .map(|j| {
            let d = cfg.up_grid.wavelength_nm(j) - cfg.up_center_nm;
            (-(d * d) / pm_denom - (d * d) / filt_denom).exp()
        })
        .collect();

    let (n_in, n_up) = (cfg.in_grid.n_points(), cfg.up_grid.n_points());
    let mut values = DMatrix::<Complex64>::zeros(n_in, n_up);
    for i in 0..n_in {
        let inv_in = 1.0 / cfg.in_grid.wavelength_nm(i);
        for j in 0..n_up {
            if envelope[j] == 0.0 {
                continue;
            }
            // energy conservation: 1/λ_gate = 1/λ_up − 1/λ_in
            let inv_gate = 1.0 / cfg.up_grid.wavelength_nm(j) - inv_in;
            if inv_gate <= 0.0 {
                continue;
            }
            let g = gate.amplitude_at(1.0 / inv_gate);
            if g != Complex64::ZERO {
                values[(i, j)] = g * envelope[j];
            }
        }
    }

    let total: f64 =
        values.iter().map(|z| z.norm_sqr()).sum::<f64>() * cfg.in_grid.step_nm() * up_step;
    if total <= 1e-300 {
        return Err(SfgError::DegenerateKernel);
    }
    values /= Complex64::new(total.sqrt(), 0.0);
    TransferFunction::new(values, cfg.in_grid, cfg.up_grid)
}

/// Schmidt decomposition K = Σ √p_n ψ_n(λ_in) φ_n(λ_up) of a transfer
/// function, truncated to the leading terms.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Leading weights, descending; p₀ is the mode selectivity.
    pub weights: Vec<f64>,
    /// Total weight beyond the kept terms.
    pub residual: f64,
    /// Set when `residual` exceeds [`RESIDUAL_WARN`].
    pub truncation_warning: bool,
    /// Input-side Schmidt modes, orthonormal on the input grid.
    pub input_modes: Vec<SpectralMode>,
    /// Up-converted Schmidt modes, orthonormal on the up grid. Each pair's
    /// phase is pinned so the up mode's largest-magnitude sample is real
    /// positive; the input mode absorbs the inverse rotation, which is what
    /// makes the (−1)ⁿ sign rule observable.
    pub up_modes: Vec<SpectralMode>,
}

/// SVD of the measure-weighted kernel K·√(Δλ_in Δλ_up); weights are squared
/// singular values normalized to sum one over the full spectrum.
///
/// Kernels with a small short side take a dense SVD; large kernels use a
/// deterministic block orthogonal iteration for the leading `n_keep` terms
/// (the weight spectrum of filtered transfer functions decays geometrically,
/// so the iteration converges in a handful of sweeps).
pub fn schmidt_decompose(
    tf: &TransferFunction,
    n_keep: usize,
) -> Result<SchmidtDecomposition, SfgError> {
    if n_keep == 0 {
        return Err(SfgError::InvalidKeep);
    }
    let din = tf.in_grid.step_nm();
    let dup = tf.up_grid.step_nm();
    let m = tf.values.clone() * Complex64::new((din * dup).sqrt(), 0.0);
    let total_sq: f64 = m.iter().map(|z| z.norm_sqr()).sum();

    let short_side = m.nrows().min(m.ncols());
    let want = n_keep.min(short_side);
    let (sigmas, u, v) = if short_side <= 128 {
        dense_svd(&m, want)
    } else {
        block_svd(&m, want)
    };

    let mut weights: Vec<f64> = sigmas.iter().map(|s| s * s / total_sq).collect();
    let kept = weights.len().min(want);
    weights.truncate(kept);
    let residual = (1.0 - weights.iter().sum::<f64>()).max(0.0);

    let mut input_modes = Vec::with_capacity(kept);
    let mut up_modes = Vec::with_capacity(kept);
    for n in 0..kept {
        let mut psi: DVector<Complex64> = u.column(n).into();
        psi /= Complex64::new(din.sqrt(), 0.0);
        let mut phi = DVector::<Complex64>::from_iterator(
            v.nrows(),
            v.column(n).iter().map(|z| z.conj()),
        );
        phi /= Complex64::new(dup.sqrt(), 0.0);
        // pin the pair phase on the up mode's peak
        let (mut arg, mut mag) = (0usize, phi[0].norm());
        for (k, z) in phi.iter().enumerate().skip(1) {
            if z.norm() > mag {
                arg = k;
                mag = z.norm();
            }
        }
        if mag > 0.0 {
            let rot = phi[arg] / Complex64::new(mag, 0.0);
            phi /= rot;
            psi *= rot;
        }
        input_modes.push(SpectralMode::normalized(tf.in_grid, psi)?);
        up_modes.push(SpectralMode::normalized(tf.up_grid, phi)?);
    }

    Ok(SchmidtDecomposition {
        truncation_warning: residual > RESIDUAL_WARN,
        weights,
        residual,
        input_modes,
        up_modes,
    })
}

fn dense_svd(
    m: &DMatrix<Complex64>,
    want: usize,
) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let svd = m.clone().svd(true, true);
    let u_full = svd.u.expect("requested");
    let vt_full = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });
    order.truncate(want);
    let sigmas: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let mut u = DMatrix::zeros(m.nrows(), order.len());
    let mut v = DMatrix::zeros(m.ncols(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &u_full.column(src));
        // rows of V† are conjugated columns of V
        for j in 0..m.ncols() {
            v[(j, dst)] = vt_full[(src, j)].conj();
        }
    }
    (sigmas, u, v)
}

/// Complex matrix split into real and imaginary parts so products run
/// through the f64 gemm kernels (nalgebra's complex product is a naive
/// triple loop; four real gemms are roughly an order of magnitude faster
/// at these shapes).
struct SplitMatrix {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl SplitMatrix {
    fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.re.nrows(), self.re.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    /// self · x
    fn mul(&self, x: &SplitMatrix) -> SplitMatrix {
        SplitMatrix {
            re: &self.re * &x.re - &self.im * &x.im,
            im: &self.re * &x.im + &self.im * &x.re,
        }
    }

    /// self† · y
    fn adjoint_mul(&self, y: &SplitMatrix) -> SplitMatrix {
        SplitMatrix {
            re: self.re.tr_mul(&y.re) + self.im.tr_mul(&y.im),
            im: self.re.tr_mul(&y.im) - self.im.tr_mul(&y.re),
        }
    }
}

/// Deterministic block orthogonal iteration for the leading singular
/// triplets; the start block is drawn from a fixed-seed ChaCha stream.
fn block_svd(
    m: &DMatrix<Complex64>,
    want: usize,
) -> (Vec<f64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let (rows, cols) = (m.nrows(), m.ncols());
    let b = (want + 4).min(rows.min(cols));
    let split = SplitMatrix::from_complex(m);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5347_4d53);
    let mut x = DMatrix::<Complex64>::from_fn(cols, b, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let mut prev: Vec<f64> = alloc::vec![0.0; b];
    let mut q_left = DMatrix::<Complex64>::zeros(rows, b);
    for _ in 0..300 {
        let y = split.mul(&SplitMatrix::from_complex(&x)).to_complex();
        q_left = thin_q(y);
        let z = split.adjoint_mul(&SplitMatrix::from_complex(&q_left)).to_complex();
        let mut sig: Vec<f64> = z.column_iter().map(|c| c.norm()).collect();
        x = thin_q(z);
        sig.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let drift: f64 = sig
            .iter()
            .zip(prev.iter())
            .map(|(s, p)| (s * s - p * p).abs())
            .sum();
        let scale: f64 = sig.iter().map(|s| s * s).sum::<f64>().max(1e-300);
        prev = sig;
        if drift < 1e-14 * scale {
            break;
        }
    }
    // Rayleigh-Ritz on the converged subspaces
    let m_qx = split.mul(&SplitMatrix::from_complex(&x)).to_complex();
    let small = q_left.adjoint() * m_qx;
    let svd = small.svd(true, true);
    let ub = svd.u.expect("requested");
    let vtb = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("finite singular values")
    });
    order.truncate(want);
    let sigmas: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let mut ub_sel = DMatrix::zeros(b, order.len());
    let mut vb_sel = DMatrix::zeros(b, order.len());
    for (dst, &src) in order.iter().enumerate() {
        ub_sel.set_column(dst, &ub.column(src));
        for j in 0..b {
            vb_sel[(j, dst)] = vtb[(src, j)].conj();
        }
    }
    let u = q_left * ub_sel;
    let v = x * vb_sel;
    (sigmas, u, v)
}

fn thin_q(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let cols = m.ncols();
    let qr = m.qr();
    let q = qr.q();
    q.columns(0, cols.min(q.ncols())).into()
}

/// Subtraction matrix induced by an SFG configuration in the given basis.
#[derive(Debug, Clone)]
pub struct InducedSubtraction {
    pub chi: SubtractionMatrix,
    /// Leading Schmidt weight (mode selectivity p₀).
    pub selectivity: f64,
    /// Projection leakage of the dominant Schmidt mode outside the basis.
    pub dominant_leakage: f64,
    pub schmidt: SchmidtDecomposition,
}

/// Full pipeline: build the transfer function, Schmidt-decompose it, project
/// the input Schmidt modes onto `basis`, and assemble χ from the mixture.
pub fn induced_subtraction(
    cfg: &SfgConfig,
    basis: &Arc<ModeBasis>,
    n_keep: usize,
) -> Result<InducedSubtraction, SfgError> {
    let tf = build_transfer(cfg)?;
    let schmidt = schmidt_decompose(&tf, n_keep)?;
    induced_from_schmidt(schmidt, basis)
}

/// χ assembly from an existing Schmidt decomposition.
///
/// The annihilation-operator coefficient of basis mode u_i for a Schmidt
/// mode ψ is c_i = Σ_k u_i[k] ψ[k] Δλ — the mode-function pairing without a
/// conjugate on u (identical to the plain projection for real bases). Each
/// projected operator is renormalized; terms with negligible weight or no
/// weight in the span are dropped and the mixture is renormalized.
pub fn induced_from_schmidt(
    schmidt: SchmidtDecomposition,
    basis: &Arc<ModeBasis>,
) -> Result<InducedSubtraction, SfgError> {
    if schmidt.input_modes.is_empty() {
        return Err(SfgError::InvalidKeep);
    }
    if basis.grid() != schmidt.input_modes[0].grid() {
        return Err(SfgError::BasisGridMismatch);
    }
    let d = basis.dimension();
    let step = basis.grid().step_nm();
    let mut terms: Vec<(f64, AnnihilationOp)> = Vec::new();
    let mut dominant_leakage = 0.0;
    for (n, (weight, psi)) in schmidt.weights.iter().zip(schmidt.input_modes.iter()).enumerate() {
        let mut c = DVector::<Complex64>::zeros(d);
        for i in 0..d {
            let u = basis.mode(i).amplitude();
            let mut acc = Complex64::ZERO;
            for (uk, pk) in u.iter().zip(psi.amplitude().iter()) {
                acc += uk * pk;
            }
            c[i] = acc * step;
        }
        let in_span: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let leakage = (1.0 - in_span).clamp(0.0, 1.0);
        if n == 0 {
            dominant_leakage = leakage;
            if leakage > DOMINANT_LEAKAGE_LIMIT {
                return Err(SfgError::BasisCoverage { leakage, limit: DOMINANT_LEAKAGE_LIMIT });
            }
        }
        if *weight < 1e-12 || in_span < 1e-9 {
            continue;
        }
        c /= Complex64::new(in_span.sqrt(), 0.0);
        let op = AnnihilationOp::new(c, basis.clone())?;
        terms.push((*weight, op));
    }
    let kept_weight: f64 = terms.iter().map(|(p, _)| *p).sum();
    for (p, _) in terms.iter_mut() {
        *p /= kept_weight;
    }
    let selectivity = schmidt.weights[0];
    let chi = chi_from_mixture(&OperatorMixture::new(terms)?);
    Ok(InducedSubtraction { chi, selectivity, dominant_leakage, schmidt })
}

/// Overlap of the dominant Schmidt input mode with (−1)^order · HG_order for
/// a pure HG_order gate at the default operating point. Values ≥ 0.95
/// confirm the wavelength-inversion sign rule.
pub fn sign_rule_check(order: usize) -> Result<f64, SfgError> {
    let cfg = SfgConfig::hg_gate(&[(order, Complex64::new(1.0, 0.0))])?;
    let tf = build_transfer(&cfg)?;
    let schmidt = schmidt_decompose(&tf, DEFAULT_N_KEEP)?;
    let reference = make_hg_mode(order, DEFAULT_GATE_CENTER_NM, DEFAULT_GATE_FWHM_NM, &cfg.in_grid)?;
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    let ov = crate::modes::overlap(&schmidt.input_modes[0], &reference)?;
    Ok(sign * ov.re)
}
