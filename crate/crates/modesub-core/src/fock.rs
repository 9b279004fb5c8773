//! Truncated single-mode Fock-space engine.
//!
//! Implements the state pipeline behind the negativity estimates: squeezed
//! vacuum, pure-loss channels, single-photon subtraction, the realistic
//! heralded state with its false/correct click ratios, and Wigner-function
//! evaluation in the convention where the vacuum quadrature variance is 1
//! (so W_vac(0,0) = 1/2π and W_|1⟩(0,0) = −1/2π).

use core::f64::consts::PI;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg;

/// Tolerances mirroring the subtraction-matrix ones.
const HERM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-9;
/// Relative population allowed at the truncation level.
pub const TAIL_TOL: f64 = 1e-6;
/// Hilbert-space dimension cap for the two-mode brute-force check.
pub const TWO_MODE_DIM_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("matrix is {rows}×{cols}, expected {dim}×{dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("trace {0} outside (0, 1]")]
    BadTrace(f64),
    #[error("n_max = {n_max} too small: level-{n_max} population is {tail:.3e} of trace")]
    TruncationTail { n_max: usize, tail: f64 },
    #[error("squeezing must be nonnegative dB, got {0}")]
    NegativeSqueezing(f64),
    #[error("transmittance {0} outside [0, 1]")]
    BadTransmittance(f64),
    #[error("weight {0} outside [0, 1]")]
    BadWeight(f64),
    #[error("cannot herald a subtraction from (near-)vacuum (norm {0:.3e})")]
    HeraldImpossible(f64),
    #[error("herald branch weights undefined (denominator {0:.3e})")]
    UndefinedHerald(f64),
    #[error("two-mode check needs (n_max+1)² ≤ {cap}, got n_max = {n_max}")]
    MemoryGuard { n_max: usize, cap: usize },
}

/// Truncated single-mode density matrix on Fock levels 0..=n_max.
///
/// Sub-normalized traces are allowed so unheralded branches can carry their
/// norm explicitly.
#[derive(Debug, Clone)]
pub struct FockDensity {
    matrix: DMatrix<Complex64>,
    n_max: usize,
}

impl FockDensity {
    pub fn new(matrix: DMatrix<Complex64>, n_max: usize) -> Result<Self, FockError> {
        let dim = n_max + 1;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(FockError::Shape { rows: matrix.nrows(), cols: matrix.ncols(), dim });
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > HERM_TOL {
            return Err(FockError::NotHermitian(herm));
        }
        let tr = linalg::trace_re(&matrix);
        if tr <= 0.0 || tr > 1.0 + HERM_TOL {
            return Err(FockError::BadTrace(tr));
        }
        let min_eig = linalg::eigh(&matrix).values[0];
        if min_eig < PSD_TOL {
            return Err(FockError::NotPsd(min_eig));
        }
        Ok(Self { matrix, n_max })
    }

    /// Constructor for matrices valid by construction (channel outputs and
    /// convex combinations of valid states).
    pub(crate) fn from_channel(matrix: DMatrix<Complex64>, n_max: usize) -> Self {
        debug_assert!(linalg::hermiticity_defect(&matrix) <= 1e-9);
        Self { matrix, n_max }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max).expect("vacuum fits any truncation")
    }

    /// Photon-number state |n⟩⟨n|.
    pub fn fock(n: usize, n_max: usize) -> Result<Self, FockError> {
        let dim = n_max + 1;
        if n > n_max {
            return Err(FockError::Shape { rows: n + 1, cols: n + 1, dim });
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(Self { matrix: m, n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.matrix)
    }

    /// Diagonal population of level `n` (not trace-normalized).
    pub fn population(&self, n: usize) -> f64 {
        self.matrix[(n, n)].re
    }

    /// Population of the truncation level relative to the trace.
    pub fn tail_fraction(&self) -> f64 {
        self.population(self.n_max) / self.trace()
    }
}

/// Squeezed-vacuum parameters; `squeezing_db` maps to r = dB·ln(10)/20.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezeParams {
    pub squeezing_db: f64,
    pub phase: f64,
}

impl SqueezeParams {
    pub fn new(squeezing_db: f64, phase: f64) -> Result<Self, FockError> {
        if !(squeezing_db >= 0.0) {
            return Err(FockError::NegativeSqueezing(squeezing_db));
        }
        Ok(Self { squeezing_db, phase })
    }

    pub fn r(&self) -> f64 {
        self.squeezing_db * core::f64::consts::LN_10 / 20.0
    }
}

/// Initial and final transmittances of the loss chain around the subtractor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChain {
    pub t_in: f64,
    pub t_fi: f64,
}

impl LossChain {
    pub fn new(t_in: f64, t_fi: f64) -> Result<Self, FockError> {
        for t in [t_in, t_fi] {
            if !(0.0..=1.0).contains(&t) {
                return Err(FockError::BadTransmittance(t));
            }
        }
        Ok(Self { t_in, t_fi })
    }

    /// Overall transmittance t_in·t_fi; derived, never stored.
    pub fn t_ovr(&self) -> f64 {
        self.t_in * self.t_fi
    }
}

/// Pure squeezed vacuum truncated at `n_max` and trace-renormalized.
///
/// Even-photon amplitudes follow c_{2m} = (−e^{iφ} tanh r)^m √((2m)!)/(2^m m!)
/// /√cosh r; odd populations are exactly zero.
pub fn squeezed_vacuum(p: &SqueezeParams, n_max: usize) -> Result<FockDensity, FockError> {
    let r = p.r();
    let dim = n_max + 1;
    let mut psi = DVector::<Complex64>::zeros(dim);
    let tanh_r = r.tanh();
    let factor = Complex64::from_polar(tanh_r, p.phase + PI); // −e^{iφ} tanh r
    let mut amp = Complex64::new(1.0 / r.cosh().sqrt(), 0.0);
    let mut level = 0usize;
    psi[0] = amp;
    while level + 2 <= n_max {
        let m = (level / 2) as f64;
        // c_{2m+2}/c_{2m} = (−e^{iφ} tanh r)·√((2m+1)(2m+2))/(2(m+1))
        amp *= factor * ((2.0 * m + 1.0) * (2.0 * m + 2.0)).sqrt() / (2.0 * (m + 1.0));
        level += 2;
        psi[level] = amp;
    }
    let norm_sq: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let rho = linalg::outer(&psi) / Complex64::new(norm_sq, 0.0);
    let state = FockDensity::from_channel(rho, n_max);
    let tail = state.tail_fraction();
    if tail > TAIL_TOL {
        return Err(FockError::TruncationTail { n_max, tail });
    }
    Ok(state)
}

/// Σ_n n ρ_nn / tr ρ.
pub fn mean_photons(rho: &FockDensity) -> f64 {
    let sum: f64 = (0..=rho.n_max()).map(|n| n as f64 * rho.population(n)).sum();
    sum / rho.trace()
}

/// Kraus amplitudes of the pure-loss channel: A_k|n⟩ = c(n,k)|n−k⟩ with
/// c(n,k) = √(C(n,k) t^(n−k) (1−t)^k). Row n of the returned table holds
/// c(n, 0..=n).
fn loss_amplitudes(n_max: usize, t: f64) -> Vec<Vec<f64>> {
    let mut table = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = Vec::with_capacity(n + 1);
        let mut binom = 1.0f64;
        for k in 0..=n {
            if k > 0 {
                binom *= (n - k + 1) as f64 / k as f64;
            }
            let weight = binom * t.powi((n - k) as i32) * (1.0 - t).powi(k as i32);
            row.push(weight.max(0.0).sqrt());
        }
        table.push(row);
    }
    table
}

/// Pure-loss channel with transmittance `t`; trace preserving.
pub fn loss_channel(rho: &FockDensity, t: f64) -> Result<FockDensity, FockError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(FockError::BadTransmittance(t));
    }
    let n_max = rho.n_max();
    let amps = loss_amplitudes(n_max, t);
    let src = rho.matrix();
    let mut out = DMatrix::<Complex64>::zeros(n_max + 1, n_max + 1);
    for k in 0..=n_max {
        for m in 0..=(n_max - k) {
            let cm = amps[m + k][k];
            if cm == 0.0 {
                continue;
            }
            for n in 0..=(n_max - k) {
                let cn = amps[n + k][k];
                if cn == 0.0 {
                    continue;
                }
                out[(m, n)] += src[(m + k, n + k)] * (cm * cn);
            }
        }
    }
    Ok(FockDensity::from_channel(out, n_max))
}

/// â ρ â†, renormalized to the input trace, plus the herald norm
/// tr(â ρ â†) = mean_photons(ρ)·tr(ρ).
pub fn subtract_photon(rho: &FockDensity) -> Result<(FockDensity, f64), FockError> {
    let n_max = rho.n_max();
    let src = rho.matrix();
    let norm: f64 = (1..=n_max).map(|n| n as f64 * src[(n, n)].re).sum();
    if norm < 1e-12 {
        return Err(FockError::HeraldImpossible(norm));
    }
    let scale = rho.trace() / norm;
    let mut out = DMatrix::<Complex64>::zeros(n_max + 1, n_max + 1);
    for m in 0..n_max {
        let fm = ((m + 1) as f64).sqrt();
        for n in 0..n_max {
            let fn_ = ((n + 1) as f64).sqrt();
            out[(m, n)] = src[(m + 1, n + 1)] * (fm * fn_ * scale);
        }
    }
    Ok((FockDensity::from_channel(out, n_max), norm))
}

/// Output of the realistic heralded-subtraction model.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    pub state: FockDensity,
    /// Weight of the squeezed-vacuum branch heralded by a false click.
    pub r_false: f64,
    /// Weight of the correctly subtracted branch; r_false + r_corr = 1.
    pub r_corr: f64,
}

/// Heralded state of the dominant subtraction mode for squeezed-vacuum
/// input, single-photon weight `w1`, mode selectivity `p0`, and the loss
/// chain (two-photon events neglected):
///
/// ρ = r_false·σ' + r_corr·(â σ' â†)/tr(â σ' â†), with σ' the squeezed
/// vacuum after the overall loss, and
///
/// r_corr = w1·p0·t_in·⟨n̂⟩ / ((1−w1) + w1·t_in·⟨n̂⟩),  r_false = 1 − r_corr,
///
/// where ⟨n̂⟩ is the mean photon number of the (truncated) input squeezed
/// vacuum before any loss.
pub fn heralded_state(
    p: &SqueezeParams,
    w1: f64,
    p0: f64,
    chain: &LossChain,
    n_max: usize,
) -> Result<HeraldedState, FockError> {
    for w in [w1, p0] {
        if !(0.0..=1.0).contains(&w) {
            return Err(FockError::BadWeight(w));
        }
    }
    let sigma = squeezed_vacuum(p, n_max)?;
    let n_bar = mean_photons(&sigma);
    let denom = (1.0 - w1) + w1 * chain.t_in * n_bar;
    if denom < 1e-15 {
        return Err(FockError::UndefinedHerald(denom));
    }
    let r_corr = w1 * p0 * chain.t_in * n_bar / denom;
    let r_false = 1.0 - r_corr;
    let lossy = loss_channel(&sigma, chain.t_ovr())?;
    let state = if r_corr > 0.0 {
        let (subtracted, _) = subtract_photon(&lossy)?;
        let m = lossy.matrix() * Complex64::new(r_false, 0.0)
            + subtracted.matrix() * Complex64::new(r_corr, 0.0);
        FockDensity::from_channel(m, n_max)
    } else {
        lossy
    };
    Ok(HeraldedState { state, r_false, r_corr })
}

/// W(0,0) = (1/2π) Σ_n (−1)ⁿ ρ_nn / tr ρ.
///
/// States entering Wigner evaluation should satisfy
/// [`FockDensity::tail_fraction`] ≤ [`TAIL_TOL`]; callers simulating near the
/// truncation edge check that first.
pub fn wigner_origin(rho: &FockDensity) -> f64 {
    let parity: f64 = (0..=rho.n_max())
        .map(|n| if n % 2 == 0 { rho.population(n) } else { -rho.population(n) })
        .sum();
    parity / rho.trace() / (2.0 * PI)
}

/// W(x, p) on the grid xs × ps via displaced-parity evaluation,
/// α = (x + ip)/2. Integrates to tr ρ on a sufficiently wide grid.
///
/// The truncation must cover the displaced support: n_max should exceed
/// max(x² + p²)/4 by a few photons, otherwise the far tails of the grid are
/// dominated by truncation error.
pub fn wigner_grid(rho: &FockDensity, xs: &[f64], ps: &[f64]) -> DMatrix<f64> {
    let dim = rho.n_max() + 1;
    let tr = rho.trace();
    let eig = linalg::eigh(rho.matrix());
    let kept: Vec<(f64, DVector<Complex64>)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 1e-14)
        .map(|(k, &l)| (l / tr, DVector::from(eig.vectors.column(k))))
        .collect();
    let lnfact = log_factorials(dim);
    let mut out = DMatrix::zeros(xs.len(), ps.len());
    for (ix, &x) in xs.iter().enumerate() {
        for (ip, &p) in ps.iter().enumerate() {
            let alpha = Complex64::new(x / 2.0, p / 2.0);
            // D(α)† = D(−α)
            let d_adj = displacement(-alpha, dim, &lnfact);
            let mut w = 0.0;
            for (weight, v) in &kept {
                let dv = &d_adj * v;
                let parity: f64 = dv
                    .iter()
                    .enumerate()
                    .map(|(n, z)| if n % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
                    .sum();
                w += weight * parity;
            }
            out[(ix, ip)] = w * tr / (2.0 * PI);
        }
    }
    out
}

fn log_factorials(dim: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(dim);
    let mut acc = 0.0f64;
    lf.push(0.0);
    for n in 1..dim {
        acc += (n as f64).ln();
        lf.push(acc);
    }
    lf
}

/// Matrix elements ⟨m|D(α)|n⟩ of the displacement operator on the truncated
/// space, via the associated-Laguerre closed form with log-domain magnitudes.
fn displacement(alpha: Complex64, dim: usize, lnfact: &[f64]) -> DMatrix<Complex64> {
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let ln_mag_alpha = alpha.norm().ln();
    let arg = alpha.arg();
    let mut d = DMatrix::<Complex64>::zeros(dim, dim);
    for m in 0..dim {
        for n in 0..dim {
            let (lo, hi) = if m >= n { (n, m) } else { (m, n) };
            let k = hi - lo;
            let lag = laguerre(lo, k as f64, x);
            let ln_mag = 0.5 * (lnfact[lo] - lnfact[hi]) + k as f64 * ln_mag_alpha - 0.5 * x;
            let mag = ln_mag.exp() * lag;
            // m ≥ n: α^(m−n);  m < n: (−α*)^(n−m)
            let phase = if m >= n {
                Complex64::from_polar(1.0, k as f64 * arg)
            } else {
                Complex64::from_polar(1.0, k as f64 * (PI - arg))
            };
            d[(m, n)] = phase * mag;
        }
    }
    d
}

/// Associated Laguerre polynomial L_n^{(a)}(x) by upward recurrence.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * l - (kf + a) * lm1) / (kf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Validates the closed-form heralded state against a literal two-mode
/// simulation: σ⊗σ (dominant mode plus one bystander carrying the (1−p₀)
/// subtraction weight), per-mode initial loss, the realistic click map with
/// w₂ = 0, per-mode final loss, then a partial trace. Returns the trace
/// distance between the two routes.
pub fn brute_force_two_mode_check(
    p: &SqueezeParams,
    w1: f64,
    p0: f64,
    chain: &LossChain,
    n_max: usize,
) -> Result<f64, FockError> {
    let dim = n_max + 1;
    if dim * dim > TWO_MODE_DIM_CAP {
        return Err(FockError::MemoryGuard { n_max, cap: TWO_MODE_DIM_CAP });
    }
    for w in [w1, p0] {
        if !(0.0..=1.0).contains(&w) {
            return Err(FockError::BadWeight(w));
        }
    }
    let sigma = squeezed_vacuum(p, n_max)?;
    let mut rho = sigma.matrix().kronecker(sigma.matrix());
    rho = two_mode_loss(&rho, dim, chain.t_in);

    // click-conditioned (unnormalized) map: (1−w1)·ρ + w1·(p0 â₀ρâ₀† + (1−p0) â₁ρâ₁†)
    let sub0 = two_mode_subtract(&rho, dim, 0);
    let sub1 = two_mode_subtract(&rho, dim, 1);
    let clicked = &rho * Complex64::new(1.0 - w1, 0.0)
        + sub0 * Complex64::new(w1 * p0, 0.0)
        + sub1 * Complex64::new(w1 * (1.0 - p0), 0.0);

    let after_final = two_mode_loss(&clicked, dim, chain.t_fi);
    let mut reduced = partial_trace_mode1(&after_final, dim);
    let tr = linalg::trace_re(&reduced);
    reduced /= Complex64::new(tr, 0.0);

    let closed_form = heralded_state(p, w1, p0, chain, n_max)?;
    Ok(linalg::trace_distance(&reduced, closed_form.state.matrix()))
}

/// Loss with transmittance `t` applied to *both* modes of a two-mode state.
fn two_mode_loss(rho: &DMatrix<Complex64>, dim: usize, t: f64) -> DMatrix<Complex64> {
    let amps = loss_amplitudes(dim - 1, t);
    let idx = |a: usize, b: usize| a * dim + b;
    // mode 0
    let mut stage = DMatrix::<Complex64>::zeros(dim * dim, dim * dim);
    for k in 0..dim {
        for m0 in 0..dim - k {
            let cm = amps[m0 + k][k];
            if cm == 0.0 {
                continue;
            }
            for n0 in 0..dim - k {
                let cn = amps[n0 + k][k];
                if cn == 0.0 {
                    continue;
                }
                for m1 in 0..dim {
                    for n1 in 0..dim {
                        stage[(idx(m0, m1), idx(n0, n1))] +=
                            rho[(idx(m0 + k, m1), idx(n0 + k, n1))] * (cm * cn);
                    }
                }
            }
        }
    }
    // mode 1
    let mut out = DMatrix::<Complex64>::zeros(dim * dim, dim * dim);
    for k in 0..dim {
        for m1 in 0..dim - k {
            let cm = amps[m1 + k][k];
            if cm == 0.0 {
                continue;
            }
            for n1 in 0..dim - k {
                let cn = amps[n1 + k][k];
                if cn == 0.0 {
                    continue;
                }
                for m0 in 0..dim {
                    for n0 in 0..dim {
                        out[(idx(m0, m1), idx(n0, n1))] +=
                            stage[(idx(m0, m1 + k), idx(n0, n1 + k))] * (cm * cn);
                    }
                }
            }
        }
    }
    out
}

/// â_mode ρ â_mode† on a two-mode state.
fn two_mode_subtract(rho: &DMatrix<Complex64>, dim: usize, mode: usize) -> DMatrix<Complex64> {
    let idx = |a: usize, b: usize| a * dim + b;
    let mut out = DMatrix::<Complex64>::zeros(dim * dim, dim * dim);
    for m0 in 0..dim {
        for m1 in 0..dim {
            let (ms, valid_m) = match mode {
                0 => ((m0 + 1, m1), m0 + 1 < dim),
                _ => ((m0, m1 + 1), m1 + 1 < dim),
            };
            if !valid_m {
                continue;
            }
            let fm = if mode == 0 { ((m0 + 1) as f64).sqrt() } else { ((m1 + 1) as f64).sqrt() };
            for n0 in 0..dim {
                for n1 in 0..dim {
                    let (ns, valid_n) = match mode {
                        0 => ((n0 + 1, n1), n0 + 1 < dim),
                        _ => ((n0, n1 + 1), n1 + 1 < dim),
                    };
                    if !valid_n {
                        continue;
                    }
                    let fn_ = if mode == 0 { ((n0 + 1) as f64).sqrt() } else { ((n1 + 1) as f64).sqrt() };
                    out[(idx(m0, m1), idx(n0, n1))] =
                        rho[(idx(ms.0, ms.1), idx(ns.0, ns.1))] * (fm * fn_);
                }
            }
        }
    }
    out
}

fn partial_trace_mode1(rho: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let idx = |a: usize, b: usize| a * dim + b;
    let mut out = DMatrix::<Complex64>::zeros(dim, dim);
    for m0 in 0..dim {
        for n0 in 0..dim {
            let mut acc = Complex64::ZERO;
            for j in 0..dim {
                acc += rho[(idx(m0, j), idx(n0, j))];
            }
            out[(m0, n0)] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn four_db() -> SqueezeParams {
        SqueezeParams::new(4.0, 0.0).unwrap()
    }

    #[test]
    fn zero_db_is_vacuum() {
        let s = squeezed_vacuum(&SqueezeParams::new(0.0, 0.0).unwrap(), 10).unwrap();
        assert_relative_eq!(s.population(0), 1.0, epsilon = 1e-14);
        assert!(mean_photons(&s) < 1e-14);
    }

    #[test]
    fn four_db_mean_photons_matches_sinh_squared() {
        let s = squeezed_vacuum(&four_db(), 30).unwrap();
        let r = 4.0 * core::f64::consts::LN_10 / 20.0;
        assert_relative_eq!(r, 0.46051701859880916, epsilon = 1e-15);
        assert_relative_eq!(mean_photons(&s), r.sinh() * r.sinh(), epsilon = 1e-9);
        assert_relative_eq!(mean_photons(&s), 0.2275, epsilon = 2e-4);
    }

    #[test]
    fn squeezed_vacuum_has_no_odd_population() {
        let s = squeezed_vacuum(&four_db(), 21).unwrap();
        for n in (1..=21).step_by(2) {
            assert_eq!(s.population(n), 0.0);
        }
    }

    #[test]
    fn too_small_truncation_is_rejected() {
        assert!(matches!(
            squeezed_vacuum(&four_db(), 10),
            Err(FockError::TruncationTail { .. })
        ));
    }

    #[test]
    fn mean_photons_of_fock_states() {
        assert_relative_eq!(mean_photons(&FockDensity::vacuum(8)), 0.0);
        assert_relative_eq!(mean_photons(&FockDensity::fock(1, 8).unwrap()), 1.0);
    }

    #[test]
    fn loss_identity_and_full_loss() {
        let s = squeezed_vacuum(&four_db(), 24).unwrap();
        let same = loss_channel(&s, 1.0).unwrap();
        let dev = (same.matrix() - s.matrix()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(dev < 1e-14);
        let vac = loss_channel(&s, 0.0).unwrap();
        assert_relative_eq!(vac.population(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_photon_under_ninety_percent_loss() {
        let one = FockDensity::fock(1, 4).unwrap();
        let out = loss_channel(&one, 0.9).unwrap();
        assert_relative_eq!(out.population(0), 0.1, epsilon = 1e-14);
        assert_relative_eq!(out.population(1), 0.9, epsilon = 1e-14);
    }

    #[test]
    fn loss_preserves_trace_and_scales_mean() {
        let s = squeezed_vacuum(&four_db(), 24).unwrap();
        let out = loss_channel(&s, 0.73).unwrap();
        assert_relative_eq!(out.trace(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(mean_photons(&out), 0.73 * mean_photons(&s), epsilon = 1e-9);
    }

    #[test]
    fn loss_composes() {
        let s = squeezed_vacuum(&four_db(), 24).unwrap();
        let a = loss_channel(&loss_channel(&s, 0.8).unwrap(), 0.6).unwrap();
        let b = loss_channel(&s, 0.48).unwrap();
        let dev = (a.matrix() - b.matrix()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        assert!(dev < 1e-9, "composition deviation {dev}");
    }

    #[test]
    fn subtraction_of_fock_states() {
        let (vac, norm) = subtract_photon(&FockDensity::fock(1, 6).unwrap()).unwrap();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-14);
        assert_relative_eq!(vac.population(0), 1.0, epsilon = 1e-14);

        let (one, norm2) = subtract_photon(&FockDensity::fock(2, 6).unwrap()).unwrap();
        assert_relative_eq!(norm2, 2.0, epsilon = 1e-14);
        assert_relative_eq!(one.population(1), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn subtraction_flips_parity_of_squeezed_vacuum() {
        let s = squeezed_vacuum(&four_db(), 30).unwrap();
        let parity_before = 2.0 * PI * wigner_origin(&s);
        assert_relative_eq!(parity_before, 1.0, epsilon = 1e-12);
        let (sub, _) = subtract_photon(&s).unwrap();
        let parity_after = 2.0 * PI * wigner_origin(&sub);
        assert_relative_eq!(parity_after, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn subtraction_from_vacuum_impossible() {
        assert!(matches!(
            subtract_photon(&FockDensity::vacuum(6)),
            Err(FockError::HeraldImpossible(_))
        ));
    }

    #[test]
    fn heralded_state_perfect_device() {
        let chain = LossChain::new(1.0, 1.0).unwrap();
        let h = heralded_state(&four_db(), 1.0, 1.0, &chain, 30).unwrap();
        assert_relative_eq!(h.r_corr, 1.0, epsilon = 1e-14);
        assert_relative_eq!(h.r_false, 0.0, epsilon = 1e-14);
        let s = squeezed_vacuum(&four_db(), 30).unwrap();
        let (sub, _) = subtract_photon(&s).unwrap();
        let dev = (h.state.matrix() - sub.matrix()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(dev < 1e-12);
    }

    #[test]
    fn heralded_state_accidental_only() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        let h = heralded_state(&four_db(), 0.0, 0.9, &chain, 30).unwrap();
        assert_relative_eq!(h.r_false, 1.0, epsilon = 1e-14);
        let lossy = loss_channel(&squeezed_vacuum(&four_db(), 30).unwrap(), 0.81).unwrap();
        let dev = (h.state.matrix() - lossy.matrix()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(dev < 1e-12);
    }

    #[test]
    fn heralded_ratios_match_closed_form() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        let h = heralded_state(&four_db(), 0.99, 0.9, &chain, 30).unwrap();
        let r = 4.0 * core::f64::consts::LN_10 / 20.0;
        let n_bar = r.sinh() * r.sinh();
        let denom = 0.01 + 0.99 * 0.9 * n_bar;
        let want_corr = 0.99 * 0.9 * 0.9 * n_bar / denom;
        assert_relative_eq!(h.r_corr, want_corr, epsilon = 1e-9);
        assert_relative_eq!(h.r_corr, 0.858, epsilon = 1e-3);
        assert_relative_eq!(h.r_false, 0.142, epsilon = 1e-3);
        assert_eq!(h.r_false + h.r_corr, 1.0);
        assert_relative_eq!(h.state.trace(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn heralded_state_rejects_vacuum_with_perfect_click() {
        let chain = LossChain::new(1.0, 1.0).unwrap();
        let vacuum_params = SqueezeParams::new(0.0, 0.0).unwrap();
        assert!(matches!(
            heralded_state(&vacuum_params, 1.0, 1.0, &chain, 10),
            Err(FockError::UndefinedHerald(_))
        ));
    }

    #[test]
    fn wigner_origin_conventions() {
        assert_relative_eq!(wigner_origin(&FockDensity::vacuum(6)), 1.0 / (2.0 * PI), epsilon = 1e-14);
        assert_relative_eq!(
            wigner_origin(&FockDensity::fock(1, 6).unwrap()),
            -1.0 / (2.0 * PI),
            epsilon = 1e-14
        );
        let s = squeezed_vacuum(&four_db(), 30).unwrap();
        assert_relative_eq!(wigner_origin(&s), 1.0 / (2.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn wigner_grid_matches_known_profiles() {
        // n_max must cover the displaced support: max |α|² = (6²+6²)/4 = 18.
        let xs: Vec<f64> = (0..41).map(|k| -6.0 + 0.3 * k as f64).collect();
        let vac = wigner_grid(&FockDensity::vacuum(48), &xs, &xs);
        // peak at origin
        assert_relative_eq!(vac[(20, 20)], 1.0 / (2.0 * PI), epsilon = 1e-10);
        let integral: f64 = vac.iter().sum::<f64>() * 0.3 * 0.3;
        assert_relative_eq!(integral, 1.0, epsilon = 1e-3);

        let one = wigner_grid(&FockDensity::fock(1, 48).unwrap(), &xs, &xs);
        assert_relative_eq!(one[(20, 20)], -1.0 / (2.0 * PI), epsilon = 1e-10);
        let min = one.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert_relative_eq!(min, -1.0 / (2.0 * PI), epsilon = 1e-10);
        let integral_one: f64 = one.iter().sum::<f64>() * 0.3 * 0.3;
        assert_relative_eq!(integral_one, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn wigner_grid_minimum_sits_at_origin_for_heralded_state() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        let h = heralded_state(&four_db(), 0.99, 0.9, &chain, 30).unwrap();
        let xs: Vec<f64> = (0..21).map(|k| -2.5 + 0.25 * k as f64).collect();
        let grid = wigner_grid(&h.state, &xs, &xs);
        let min = grid.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert_relative_eq!(min, wigner_origin(&h.state), epsilon = 1e-6);
    }

    #[test]
    fn brute_force_check_degenerate_limits() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        let d1 = brute_force_two_mode_check(&four_db(), 1.0, 1.0, &chain, 15).unwrap();
        assert!(d1 < 1e-10, "p0 = 1 distance {d1}");
        let d2 = brute_force_two_mode_check(&four_db(), 0.0, 0.9, &chain, 15).unwrap();
        assert!(d2 < 1e-10, "w1 = 0 distance {d2}");
    }

    #[test]
    fn brute_force_check_validates_closed_form() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        let d = brute_force_two_mode_check(&four_db(), 0.99, 0.9, &chain, 15).unwrap();
        assert!(d < 1e-6, "paper scenario distance {d}");
    }

    #[test]
    fn brute_force_check_memory_guard() {
        let chain = LossChain::new(0.9, 0.9).unwrap();
        assert!(matches!(
            brute_force_two_mode_check(&four_db(), 0.99, 0.9, &chain, 64),
            Err(FockError::MemoryGuard { .. })
        ));
    }
}
