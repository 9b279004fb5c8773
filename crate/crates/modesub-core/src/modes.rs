//! Frequency grids, spectral modes, and orthonormal mode bases.
//!
//! All spectral amplitudes are sampled on a [`FrequencyGrid`]: a uniform
//! wavelength grid, symmetric about its center. The discrete inner product
//! `⟨a, b⟩ = Σ_k conj(a_k) b_k Δλ` makes mode norms and overlaps
//! grid-resolution independent. Bandwidths here are far smaller than the
//! center wavelength, so a wavelength grid stands in for a frequency grid
//! with negligible error.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::chi::SubtractionMatrix;
use crate::linalg;

/// Tolerance on the unit norm of a single mode.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on pairwise orthonormality of a basis.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;
/// Relative edge amplitude above which a mode is considered truncated.
pub const EDGE_TOL: f64 = 1e-6;
/// Default warning threshold on basis-change leakage.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModeError {
    #[error("grid needs at least 2 points")]
    TooFewPoints,
    #[error("grid span must be positive")]
    NonPositiveSpan,
    #[error("grid reaches non-positive wavelengths")]
    NonPositiveWavelength,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("amplitude length {len} does not match grid ({n_points} points)")]
    LengthMismatch { len: usize, n_points: usize },
    #[error("mode is not unit-norm on its grid (norm² = {0})")]
    NotNormalized(f64),
    #[error("mode has no spectral weight")]
    ZeroAmplitude,
    #[error("operands live on different frequency grids")]
    GridMismatch,
    #[error("mode is not negligible at the grid edge (edge/peak = {0:.3e})")]
    Truncated(f64),
    #[error("band width {width_nm} nm is below two grid steps ({step_nm} nm)")]
    BandResolution { width_nm: f64, step_nm: f64 },
    #[error("basis is empty")]
    EmptyBasis,
    #[error("modes are not pairwise orthonormal (max deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("labels ({labels}) do not match modes ({modes})")]
    LabelCount { labels: usize, modes: usize },
    #[error("subtraction matrix carries no weight inside the target span")]
    DegenerateProjection,
}

/// Uniform wavelength grid, symmetric about `center_nm`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    center_nm: f64,
    span_nm: f64,
    n_points: usize,
}

impl FrequencyGrid {
    pub fn new(center_nm: f64, span_nm: f64, n_points: usize) -> Result<Self, ModeError> {
        if n_points < 2 {
            return Err(ModeError::TooFewPoints);
        }
        if !(span_nm > 0.0) || !span_nm.is_finite() {
            return Err(ModeError::NonPositiveSpan);
        }
        if !(center_nm - span_nm / 2.0 > 0.0) {
            return Err(ModeError::NonPositiveWavelength);
        }
        Ok(Self { center_nm, span_nm, n_points })
    }

    /// Default input grid: 2048 points over 775–815 nm. Resolves 0.2 nm
    /// pulse-shaper features and 0.72 nm bands with ≥ 10 samples each.
    pub fn default_input() -> Self {
        Self { center_nm: 795.0, span_nm: 40.0, n_points: 2048 }
    }

    /// Default up-converted grid: 512 points over 396–399 nm (≥ 8 samples
    /// across a 0.4 nm filter).
    pub fn default_upconverted() -> Self {
        Self { center_nm: 397.5, span_nm: 3.0, n_points: 512 }
    }

    pub fn center_nm(&self) -> f64 {
        self.center_nm
    }

    pub fn span_nm(&self) -> f64 {
        self.span_nm
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Sample spacing Δλ.
    pub fn step_nm(&self) -> f64 {
        self.span_nm / (self.n_points - 1) as f64
    }

    /// k-th sample wavelength. Offsets are computed symmetrically about the
    /// center so that mirrored indices carry exactly mirrored wavelengths.
    pub fn wavelength_nm(&self, k: usize) -> f64 {
        let half = (self.n_points - 1) as f64 / 2.0;
        self.center_nm + (k as f64 - half) * self.step_nm()
    }

    pub fn min_nm(&self) -> f64 {
        self.wavelength_nm(0)
    }

    pub fn max_nm(&self) -> f64 {
        self.wavelength_nm(self.n_points - 1)
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavelength_nm(k)).collect()
    }
}

/// Complex spectral amplitude on a grid, unit-norm under Σ|a_k|²Δλ.
#[derive(Debug, Clone)]
pub struct SpectralMode {
    grid: FrequencyGrid,
    amplitude: DVector<Complex64>,
}

impl SpectralMode {
    /// Wraps an amplitude that is already unit-norm (within [`NORM_TOL`]).
    pub fn new(grid: FrequencyGrid, amplitude: DVector<Complex64>) -> Result<Self, ModeError> {
        if amplitude.len() != grid.n_points() {
            return Err(ModeError::LengthMismatch { len: amplitude.len(), n_points: grid.n_points() });
        }
        let norm_sq = norm_sq_on_grid(&grid, &amplitude);
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(ModeError::NotNormalized(norm_sq));
        }
        Ok(Self { grid, amplitude })
    }

    /// Rescales an arbitrary amplitude to unit norm.
    pub fn normalized(grid: FrequencyGrid, amplitude: DVector<Complex64>) -> Result<Self, ModeError> {
        if amplitude.len() != grid.n_points() {
            return Err(ModeError::LengthMismatch { len: amplitude.len(), n_points: grid.n_points() });
        }
        let norm_sq = norm_sq_on_grid(&grid, &amplitude);
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(ModeError::ZeroAmplitude);
        }
        let amplitude = amplitude * Complex64::new(1.0 / norm_sq.sqrt(), 0.0);
        Ok(Self { grid, amplitude })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &DVector<Complex64> {
        &self.amplitude
    }

    /// Amplitude at an arbitrary wavelength by linear interpolation;
    /// zero outside the grid.
    pub fn amplitude_at(&self, lambda_nm: f64) -> Complex64 {
        let lo = self.grid.min_nm();
        let step = self.grid.step_nm();
        let pos = (lambda_nm - lo) / step;
        if pos < 0.0 || pos > (self.grid.n_points() - 1) as f64 {
            return Complex64::ZERO;
        }
        let k = (pos.floor() as usize).min(self.grid.n_points() - 2);
        let frac = pos - k as f64;
        self.amplitude[k] * (1.0 - frac) + self.amplitude[k + 1] * frac
    }
}

fn norm_sq_on_grid(grid: &FrequencyGrid, amplitude: &DVector<Complex64>) -> f64 {
    amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.step_nm()
}

/// Discrete inner product ⟨a, b⟩ = Σ_k conj(a_k) b_k Δλ.
pub fn overlap(a: &SpectralMode, b: &SpectralMode) -> Result<Complex64, ModeError> {
    if a.grid != b.grid {
        return Err(ModeError::GridMismatch);
    }
    let mut acc = Complex64::ZERO;
    for (x, y) in a.amplitude.iter().zip(b.amplitude.iter()) {
        acc += x.conj() * y;
    }
    Ok(acc * a.grid.step_nm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    HermiteGauss,
    WavelengthBand,
    Custom,
}

/// Ordered, pairwise-orthonormal set of spectral modes on one grid.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    kind: BasisKind,
    modes: Vec<SpectralMode>,
    labels: Vec<String>,
}

impl ModeBasis {
    pub fn new(kind: BasisKind, modes: Vec<SpectralMode>, labels: Vec<String>) -> Result<Self, ModeError> {
        if modes.is_empty() {
            return Err(ModeError::EmptyBasis);
        }
        if labels.len() != modes.len() {
            return Err(ModeError::LabelCount { labels: labels.len(), modes: modes.len() });
        }
        let grid = modes[0].grid;
        if modes.iter().any(|m| m.grid != grid) {
            return Err(ModeError::GridMismatch);
        }
        let mut max_dev = 0.0f64;
        for i in 0..modes.len() {
            for j in i..modes.len() {
                let g = overlap(&modes[i], &modes[j]).expect("grids already checked");
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((g - Complex64::new(target, 0.0)).norm());
            }
        }
        if max_dev > ORTHONORMALITY_TOL {
            return Err(ModeError::NotOrthonormal(max_dev));
        }
        Ok(Self { kind, modes, labels })
    }

    pub fn custom(modes: Vec<SpectralMode>, labels: Vec<String>) -> Result<Self, ModeError> {
        Self::new(BasisKind::Custom, modes, labels)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.modes[0].grid()
    }

    pub fn mode(&self, i: usize) -> &SpectralMode {
        &self.modes[i]
    }

    pub fn modes(&self) -> &[SpectralMode] {
        &self.modes
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Bases attached to operators are shared by reference; two handles refer to
/// the same basis if they are literally the same allocation or structurally
/// identical.
pub fn same_basis(a: &Arc<ModeBasis>, b: &Arc<ModeBasis>) -> bool {
    if Arc::ptr_eq(a, b) {
        return true;
    }
    a.kind == b.kind
        && a.dimension() == b.dimension()
        && a.grid() == b.grid()
        && a.modes
            .iter()
            .zip(b.modes.iter())
            .all(|(m, n)| m.amplitude == n.amplitude)
}

/// Real Hermite-Gaussian spectral mode of the given order.
///
/// `fwhm_hg0_nm` is the *intensity* FWHM of the order-0 mode; higher orders
/// inherit the same Gaussian waist. The amplitude is
/// H_n(u)·exp(−u²/2) with u = (λ − center)/w and w = fwhm/(2√ln2),
/// normalized on the grid.
pub fn make_hg_mode(
    order: usize,
    center_nm: f64,
    fwhm_hg0_nm: f64,
    grid: &FrequencyGrid,
) -> Result<SpectralMode, ModeError> {
    if !(fwhm_hg0_nm > 0.0) {
        return Err(ModeError::InvalidParameter("fwhm_hg0_nm must be positive"));
    }
    let w = fwhm_hg0_nm / (2.0 * (2.0f64.ln()).sqrt());
    let n = grid.n_points();
    let mut raw = DVector::zeros(n);
    let mut peak = 0.0f64;
    for k in 0..n {
        let u = (grid.wavelength_nm(k) - center_nm) / w;
        let val = hermite(order, u) * (-0.5 * u * u).exp();
        raw[k] = Complex64::new(val, 0.0);
        peak = peak.max(val.abs());
    }
    if peak == 0.0 {
        return Err(ModeError::ZeroAmplitude);
    }
    let edge = raw[0].norm().max(raw[n - 1].norm()) / peak;
    if edge > EDGE_TOL {
        return Err(ModeError::Truncated(edge));
    }
    SpectralMode::normalized(*grid, raw)
}

/// Orthonormal basis of the first `d` Hermite-Gaussian modes.
pub fn make_hg_basis(
    d: usize,
    center_nm: f64,
    fwhm_hg0_nm: f64,
    grid: &FrequencyGrid,
) -> Result<ModeBasis, ModeError> {
    if d == 0 {
        return Err(ModeError::EmptyBasis);
    }
    let mut modes = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for order in 0..d {
        modes.push(make_hg_mode(order, center_nm, fwhm_hg0_nm, grid)?);
        labels.push(format!("HG{order}"));
    }
    ModeBasis::new(BasisKind::HermiteGauss, modes, labels)
}

/// `d` contiguous, non-overlapping boxcar modes of equal width covering
/// [lambda_min, lambda_max], each unit-normalized.
pub fn make_band_basis(
    d: usize,
    lambda_min_nm: f64,
    lambda_max_nm: f64,
    grid: &FrequencyGrid,
) -> Result<ModeBasis, ModeError> {
    if d == 0 {
        return Err(ModeError::EmptyBasis);
    }
    if !(lambda_min_nm < lambda_max_nm) {
        return Err(ModeError::InvalidParameter("lambda_min must be below lambda_max"));
    }
    if lambda_min_nm < grid.min_nm() || lambda_max_nm > grid.max_nm() {
        return Err(ModeError::InvalidParameter("band range extends beyond the grid"));
    }
    let width = (lambda_max_nm - lambda_min_nm) / d as f64;
    let step = grid.step_nm();
    if width < 2.0 * step {
        return Err(ModeError::BandResolution { width_nm: width, step_nm: step });
    }
    let n = grid.n_points();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); d];
    for k in 0..n {
        let lambda = grid.wavelength_nm(k);
        if lambda < lambda_min_nm || lambda > lambda_max_nm {
            continue;
        }
        let j = (((lambda - lambda_min_nm) / width) as usize).min(d - 1);
        members[j].push(k);
    }
    let mut modes = Vec::with_capacity(d);
    let mut labels = Vec::with_capacity(d);
    for (j, idx) in members.iter().enumerate() {
        if idx.is_empty() {
            return Err(ModeError::BandResolution { width_nm: width, step_nm: step });
        }
        let mut raw = DVector::zeros(n);
        for &k in idx {
            raw[k] = Complex64::new(1.0, 0.0);
        }
        modes.push(SpectralMode::normalized(*grid, raw)?);
        let band_center = lambda_min_nm + (j as f64 + 0.5) * width;
        labels.push(format!("{band_center:.3}nm"));
    }
    ModeBasis::new(BasisKind::WavelengthBand, modes, labels)
}

/// Result of re-expressing a subtraction matrix in another basis.
#[derive(Debug, Clone)]
pub struct BasisChange {
    /// χ' = U χ U† renormalized to unit trace, attached to the target basis.
    pub chi: SubtractionMatrix,
    /// Weight escaping the target span, 1 − tr(U χ U†) ∈ [0, 1].
    pub leakage: f64,
    /// Set when `leakage` exceeds the configured threshold.
    pub excessive_leakage: bool,
}

/// Re-expresses `chi` in the basis `to`, reporting the weight that leaks out
/// of the target span. Uses [`DEFAULT_LEAKAGE_THRESHOLD`] for the warning.
pub fn change_basis(chi: &SubtractionMatrix, to: &Arc<ModeBasis>) -> Result<BasisChange, ModeError> {
    change_basis_with_threshold(chi, to, DEFAULT_LEAKAGE_THRESHOLD)
}

pub fn change_basis_with_threshold(
    chi: &SubtractionMatrix,
    to: &Arc<ModeBasis>,
    leakage_threshold: f64,
) -> Result<BasisChange, ModeError> {
    let from = chi.basis();
    if from.grid() != to.grid() {
        return Err(ModeError::GridMismatch);
    }
    let (d_to, d_from) = (to.dimension(), from.dimension());
    let mut u = DMatrix::zeros(d_to, d_from);
    for a in 0..d_to {
        for i in 0..d_from {
            u[(a, i)] = overlap(to.mode(a), from.mode(i))?;
        }
    }
    let m = &u * chi.entries() * u.adjoint();
    let t = linalg::trace_re(&m);
    let leakage = (1.0 - t).clamp(0.0, 1.0);
    if t < 1e-12 {
        return Err(ModeError::DegenerateProjection);
    }
    let entries = linalg::hermitize(&m) / Complex64::new(t, 0.0);
    let chi = SubtractionMatrix::from_congruence(entries, to.clone());
    Ok(BasisChange { chi, leakage, excessive_leakage: leakage > leakage_threshold })
}

/// Physicists' Hermite polynomial H_n(u).
fn hermite(order: usize, u: f64) -> f64 {
    match order {
        0 => 1.0,
        1 => 2.0 * u,
        _ => {
            let mut h_prev = 1.0;
            let mut h = 2.0 * u;
            for k in 1..order {
                let next = 2.0 * u * h - 2.0 * k as f64 * h_prev;
                h_prev = h;
                h = next;
            }
            h
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dense_grid() -> FrequencyGrid {
        FrequencyGrid::default_input()
    }

    #[test]
    fn grid_is_symmetric_and_uniform() {
        let g = dense_grid();
        assert_eq!(g.n_points(), 2048);
        let w = g.wavelengths();
        assert_relative_eq!(w[0], 775.0, max_relative = 1e-12);
        assert_relative_eq!(w[2047], 815.0, max_relative = 1e-12);
        for k in 0..g.n_points() {
            let mirror = g.n_points() - 1 - k;
            assert_eq!(w[k] - g.center_nm(), -(w[mirror] - g.center_nm()));
        }
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(FrequencyGrid::new(795.0, 40.0, 1), Err(ModeError::TooFewPoints)));
        assert!(matches!(FrequencyGrid::new(795.0, 0.0, 16), Err(ModeError::NonPositiveSpan)));
        assert!(matches!(FrequencyGrid::new(10.0, 40.0, 16), Err(ModeError::NonPositiveWavelength)));
    }

    #[test]
    fn hg0_has_requested_intensity_fwhm() {
        let g = dense_grid();
        let m = make_hg_mode(0, 795.0, 4.0, &g).unwrap();
        let intens: Vec<f64> = m.amplitude().iter().map(|z| z.norm_sqr()).collect();
        let peak_idx = intens
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_relative_eq!(g.wavelength_nm(peak_idx), 795.0, epsilon = g.step_nm());
        let half = intens[peak_idx] / 2.0;
        let above: Vec<usize> = intens
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= half)
            .map(|(k, _)| k)
            .collect();
        let fwhm = g.wavelength_nm(*above.last().unwrap()) - g.wavelength_nm(above[0]);
        assert_relative_eq!(fwhm, 4.0, epsilon = 2.5 * g.step_nm());
    }

    #[test]
    fn hg1_vanishes_at_center() {
        let g = FrequencyGrid::new(795.0, 40.0, 2049).unwrap(); // odd: grid hits 795 exactly
        let m = make_hg_mode(1, 795.0, 4.0, &g).unwrap();
        assert_eq!(m.amplitude()[1024], Complex64::ZERO);
    }

    #[test]
    fn hg_gram_matrix_is_identity() {
        let g = dense_grid();
        let basis = make_hg_basis(7, 795.0, 4.0, &g).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let got = overlap(basis.mode(i), basis.mode(j)).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((got - Complex64::new(want, 0.0)).norm() < 1e-8, "({i},{j}) -> {got}");
            }
        }
    }

    #[test]
    fn hg_reflection_parity_is_exact() {
        let g = dense_grid();
        for order in 0..5 {
            let m = make_hg_mode(order, 795.0, 4.0, &g).unwrap();
            let a = m.amplitude();
            let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
            for k in 0..g.n_points() {
                let mirror = g.n_points() - 1 - k;
                assert_eq!(a[k].re, sign * a[mirror].re, "order {order}, k {k}");
            }
        }
    }

    #[test]
    fn narrow_grid_truncates_hg_mode() {
        let g = FrequencyGrid::new(795.0, 6.0, 256).unwrap();
        match make_hg_mode(0, 795.0, 4.0, &g) {
            Err(ModeError::Truncated(_)) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn non_positive_fwhm_rejected() {
        let g = dense_grid();
        assert!(matches!(
            make_hg_mode(0, 795.0, 0.0, &g),
            Err(ModeError::InvalidParameter(_))
        ));
    }

    #[test]
    fn band_basis_matches_paper_geometry() {
        let g = dense_grid();
        let basis = make_band_basis(25, 786.0, 804.0, &g).unwrap();
        assert_eq!(basis.dimension(), 25);
        assert_eq!(basis.kind(), BasisKind::WavelengthBand);
        // 25 boxcars of width 0.72 nm: support of each mode spans ≤ 0.72 nm + one step.
        for m in basis.modes() {
            let support: Vec<f64> = m
                .amplitude()
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|(k, _)| g.wavelength_nm(k))
                .collect();
            let width = support.last().unwrap() - support.first().unwrap();
            assert!(width <= 0.72 + 1e-9, "support width {width}");
            assert!(width >= 0.72 - 2.0 * g.step_nm(), "support width {width}");
        }
    }

    #[test]
    fn band_gram_is_identity_by_disjoint_support() {
        let g = dense_grid();
        let basis = make_band_basis(25, 786.0, 804.0, &g).unwrap();
        for i in 0..25 {
            for j in 0..25 {
                let got = overlap(basis.mode(i), basis.mode(j)).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((got - Complex64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_band_self_overlap_is_one() {
        let g = dense_grid();
        let basis = make_band_basis(1, 786.0, 804.0, &g).unwrap();
        let s = overlap(basis.mode(0), basis.mode(0)).unwrap();
        assert_relative_eq!(s.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn band_narrower_than_two_steps_rejected() {
        let g = FrequencyGrid::new(795.0, 40.0, 128).unwrap();
        assert!(matches!(
            make_band_basis(100, 786.0, 804.0, &g),
            Err(ModeError::BandResolution { .. })
        ));
    }

    #[test]
    fn overlap_is_conjugate_symmetric() {
        let g = dense_grid();
        let a = make_hg_mode(0, 793.0, 4.0, &g).unwrap();
        let mut raw = a.amplitude().clone();
        for (k, z) in raw.iter_mut().enumerate() {
            *z *= Complex64::new(0.0, 1.0) * Complex64::new((k as f64 * 0.01).cos(), (k as f64 * 0.01).sin());
        }
        let b = SpectralMode::normalized(g, raw).unwrap();
        let ab = overlap(&a, &b).unwrap();
        let ba = overlap(&b, &a).unwrap();
        assert_relative_eq!(ab.re, ba.re, epsilon = 1e-12);
        assert_relative_eq!(ab.im, -ba.im, epsilon = 1e-12);
    }

    #[test]
    fn overlap_requires_shared_grid() {
        let a = make_hg_mode(0, 795.0, 4.0, &dense_grid()).unwrap();
        let other = FrequencyGrid::new(795.0, 40.0, 1024).unwrap();
        let b = make_hg_mode(0, 795.0, 4.0, &other).unwrap();
        assert!(matches!(overlap(&a, &b), Err(ModeError::GridMismatch)));
    }

    #[test]
    fn hg0_band_overlap_matches_quadrature() {
        let g = dense_grid();
        let hg0 = make_hg_mode(0, 795.0, 4.0, &g).unwrap();
        let bands = make_band_basis(25, 786.0, 804.0, &g).unwrap();
        // band 12 is centered on 795 nm
        let band = bands.mode(12);
        let got = overlap(&hg0, band).unwrap();
        let mut by_hand = 0.0;
        for k in 0..g.n_points() {
            by_hand += hg0.amplitude()[k].re * band.amplitude()[k].re * g.step_nm();
        }
        assert!(got.re > 0.0);
        assert_relative_eq!(got.re, by_hand, epsilon = 1e-12);
        assert_relative_eq!(got.im, 0.0, epsilon = 1e-15);
    }
}
