//! Subtraction-matrix algebra.
//!
//! A single-photon subtraction is a mixture of annihilation operators
//! Â_n = Σ_i c_ni â_i with weights p_n. It is uniquely characterized by the
//! subtraction matrix χ_ij = Σ_n p_n c_ni c*_nj — Hermitian, positive
//! semidefinite, trace one — in direct analogy with a density matrix for a
//! state. This module constructs χ from mixtures, computes its figures of
//! merit (purity, effective mode count, selectivity, fidelity), evaluates
//! the coherent-probe success probability, and projects noisy
//! reconstructions back onto the physical set.

use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg;
use crate::modes::{same_basis, ModeBasis};

/// Tolerance on Hermiticity and trace of χ.
pub const CHI_TOL: f64 = 1e-10;
/// Slack on the smallest eigenvalue of χ; accepts floating-point noise from
/// maximum-likelihood reconstructions.
pub const PSD_TOL: f64 = -1e-9;
/// Eigenvalue gap below which the dominant mode is flagged degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChiError {
    #[error("coefficient vector is not unit-norm (norm² = {0})")]
    CoeffNorm(f64),
    #[error("coefficient vector has {len} entries but the basis has {dim} modes")]
    CoeffLength { len: usize, dim: usize },
    #[error("mixture is empty")]
    EmptyMixture,
    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),
    #[error("mixture weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("operands are attached to different bases")]
    BasisMismatch,
    #[error("matrix is {rows}×{cols}, expected square of dimension {dim}")]
    Shape { rows: usize, cols: usize, dim: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("matrix trace is {0}, not 1")]
    BadTrace(f64),
    #[error("probe amplitudes are not unit-norm (norm² = {0})")]
    ProbeNorm(f64),
    #[error("mean photon number must be nonnegative, got {0}")]
    NegativeMeanPhotons(f64),
    #[error("projection input has no positive spectral weight")]
    DegenerateInput,
}

/// Annihilation operator Â = Σ_i c_i â_i in an orthonormal mode basis;
/// the bosonic commutator [Â, Â†] = 1 forces Σ_i |c_i|² = 1.
#[derive(Debug, Clone)]
pub struct AnnihilationOp {
    coeffs: DVector<Complex64>,
    basis: Arc<ModeBasis>,
}

impl AnnihilationOp {
    pub fn new(coeffs: DVector<Complex64>, basis: Arc<ModeBasis>) -> Result<Self, ChiError> {
        if coeffs.len() != basis.dimension() {
            return Err(ChiError::CoeffLength { len: coeffs.len(), dim: basis.dimension() });
        }
        let norm_sq: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > CHI_TOL {
            return Err(ChiError::CoeffNorm(norm_sq));
        }
        Ok(Self { coeffs, basis })
    }

    /// â_i: subtraction from the single basis mode `i`.
    pub fn basis_mode(i: usize, basis: Arc<ModeBasis>) -> Result<Self, ChiError> {
        let d = basis.dimension();
        if i >= d {
            return Err(ChiError::CoeffLength { len: i + 1, dim: d });
        }
        let mut c = DVector::zeros(d);
        c[i] = Complex64::new(1.0, 0.0);
        Self::new(c, basis)
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }
}

/// Mixture Σ_n p_n Â_n ρ Â_n† with Σ p_n = 1.
#[derive(Debug, Clone)]
pub struct OperatorMixture {
    terms: Vec<(f64, AnnihilationOp)>,
}

impl OperatorMixture {
    pub fn new(terms: Vec<(f64, AnnihilationOp)>) -> Result<Self, ChiError> {
        if terms.is_empty() {
            return Err(ChiError::EmptyMixture);
        }
        let mut sum = 0.0;
        for (p, _) in &terms {
            if *p < 0.0 {
                return Err(ChiError::NegativeWeight(*p));
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > CHI_TOL {
            return Err(ChiError::WeightSum(sum));
        }
        let basis = terms[0].1.basis();
        if terms.iter().any(|(_, op)| !same_basis(op.basis(), basis)) {
            return Err(ChiError::BasisMismatch);
        }
        Ok(Self { terms })
    }

    /// Pure coherent subtraction: a single operator with weight one.
    pub fn pure(op: AnnihilationOp) -> Self {
        Self { terms: alloc::vec![(1.0, op)] }
    }

    pub fn terms(&self) -> &[(f64, AnnihilationOp)] {
        &self.terms
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        self.terms[0].1.basis()
    }
}

/// The subtraction matrix χ: Hermitian, PSD, unit trace.
#[derive(Debug, Clone)]
pub struct SubtractionMatrix {
    entries: DMatrix<Complex64>,
    basis: Arc<ModeBasis>,
}

impl SubtractionMatrix {
    pub fn new(entries: DMatrix<Complex64>, basis: Arc<ModeBasis>) -> Result<Self, ChiError> {
        let d = basis.dimension();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(ChiError::Shape { rows: entries.nrows(), cols: entries.ncols(), dim: d });
        }
        let herm = linalg::hermiticity_defect(&entries);
        if herm > CHI_TOL {
            return Err(ChiError::NotHermitian(herm));
        }
        let tr = linalg::trace_re(&entries);
        if (tr - 1.0).abs() > CHI_TOL {
            return Err(ChiError::BadTrace(tr));
        }
        let min_eig = linalg::eigh(&entries).values[0];
        if min_eig < PSD_TOL {
            return Err(ChiError::NotPsd(min_eig));
        }
        Ok(Self { entries, basis })
    }

    /// Constructor for matrices that are PSD and unit-trace by construction
    /// (congruences and convex combinations of already-valid χ); skips the
    /// eigenvalue check but keeps the cheap guards in debug builds.
    pub(crate) fn from_congruence(entries: DMatrix<Complex64>, basis: Arc<ModeBasis>) -> Self {
        debug_assert!(linalg::hermiticity_defect(&entries) <= CHI_TOL);
        debug_assert!((linalg::trace_re(&entries) - 1.0).abs() <= CHI_TOL);
        Self { entries, basis }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn basis(&self) -> &Arc<ModeBasis> {
        &self.basis
    }
}

/// χ_ij = Σ_n p_n c_ni c*_nj. Valid by construction for a valid mixture.
pub fn chi_from_mixture(mix: &OperatorMixture) -> SubtractionMatrix {
    let d = mix.basis().dimension();
    let mut entries = DMatrix::<Complex64>::zeros(d, d);
    for (p, op) in mix.terms() {
        entries += linalg::outer(op.coeffs()) * Complex64::new(*p, 0.0);
    }
    // Weights and coefficient norms are each 1 within 1e-10; renormalizing
    // the trace removes the accumulated slack.
    let tr = linalg::trace_re(&entries);
    entries /= Complex64::new(tr, 0.0);
    SubtractionMatrix::from_congruence(entries, mix.basis().clone())
}

/// tr(χ²) ∈ [1/d, 1]: 1 for a coherent subtraction, 1/d for the completely
/// incoherent one.
pub fn purity(chi: &SubtractionMatrix) -> f64 {
    chi.entries().iter().map(|z| z.norm_sqr()).sum()
}

/// 1/tr(χ²) ∈ [1, d]: the effective number of orthogonal modes addressed.
pub fn effective_mode_count(chi: &SubtractionMatrix) -> f64 {
    1.0 / purity(chi)
}

/// Dominant annihilation operator of a subtraction matrix.
#[derive(Debug, Clone)]
pub struct DominantMode {
    /// Largest eigenvalue p₀ — the mode selectivity.
    pub selectivity: f64,
    /// Corresponding eigenvector as an annihilation operator, global phase
    /// fixed so its largest-magnitude entry is real positive.
    pub op: AnnihilationOp,
    /// Set when the top eigenvalue gap is below [`DEGENERACY_GAP`]; the
    /// returned operator is then a deterministic tie-break.
    pub degenerate: bool,
}

/// Largest eigenvalue of χ (the mode selectivity p₀) and its eigenvector.
///
/// Degenerate spectra are flagged; the tie-break among near-top eigenvectors
/// picks the one whose dominant entry sits at the lowest mode index.
pub fn dominant_mode(chi: &SubtractionMatrix) -> DominantMode {
    let eig = linalg::eigh(chi.entries());
    let d = eig.values.len();
    let top = eig.values[d - 1];
    let degenerate = d > 1 && (top - eig.values[d - 2]) < DEGENERACY_GAP;

    let mut best: Option<(usize, f64, usize)> = None; // (argmax index, |entry|, column)
    for k in (0..d).rev() {
        if top - eig.values[k] >= DEGENERACY_GAP {
            break;
        }
        let col = eig.vectors.column(k);
        // first index attaining the maximum magnitude
        let (mut arg, mut mag) = (0usize, col[0].norm());
        for (i, z) in col.iter().enumerate().skip(1) {
            if z.norm() > mag {
                arg = i;
                mag = z.norm();
            }
        }
        let better = match &best {
            None => true,
            Some((barg, bmag, _)) => arg < *barg || (arg == *barg && mag > *bmag),
        };
        if better {
            best = Some((arg, mag, k));
        }
    }
    let (arg, _, col_idx) = best.expect("at least one eigenpair");
    let mut v: DVector<Complex64> = eig.vectors.column(col_idx).into();
    let phase = v[arg] / Complex64::new(v[arg].norm(), 0.0);
    v /= phase;
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v /= Complex64::new(norm, 0.0);
    let op = AnnihilationOp::new(v, chi.basis().clone()).expect("unit eigenvector");
    DominantMode { selectivity: top, op, degenerate }
}

/// Fidelity (tr √(√χ μ √χ))² between two subtractions: symmetric, in [0, 1],
/// and 1 iff χ = μ.
pub fn fidelity(chi: &SubtractionMatrix, mu: &SubtractionMatrix) -> Result<f64, ChiError> {
    if chi.dim() != mu.dim() || !same_basis(chi.basis(), mu.basis()) {
        return Err(ChiError::BasisMismatch);
    }
    let root = linalg::sqrt_psd(chi.entries());
    let inner = &root * mu.entries() * &root;
    let sum: f64 = linalg::eigh(&inner).values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok((sum * sum).min(1.0))
}

/// Success probability |β|² Σ_ij χ_ij b_i b*_j of heralding on the coherent
/// probe with normalized amplitudes `b` and mean photon number |β|².
///
/// The experimental proportionality constant κ is applied by the tomography
/// layer, not here. The pairing puts the conjugate on the second index
/// (it is the quadratic form of χ at conj(b)), so the result is real and,
/// by positivity, nonnegative.
pub fn success_probability(
    chi: &SubtractionMatrix,
    b: &DVector<Complex64>,
    mean_photons: f64,
) -> Result<f64, ChiError> {
    if b.len() != chi.dim() {
        return Err(ChiError::CoeffLength { len: b.len(), dim: chi.dim() });
    }
    let norm_sq: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sq - 1.0).abs() > CHI_TOL {
        return Err(ChiError::ProbeNorm(norm_sq));
    }
    if mean_photons < 0.0 {
        return Err(ChiError::NegativeMeanPhotons(mean_photons));
    }
    Ok(mean_photons * linalg::subtraction_form(chi.entries(), b).max(0.0))
}

/// Projects an arbitrary square matrix onto the physical set: hermitize,
/// clip negative eigenvalues to zero, renormalize the trace to one.
pub fn project_to_physical(
    raw: &DMatrix<Complex64>,
    basis: Arc<ModeBasis>,
) -> Result<SubtractionMatrix, ChiError> {
    let d = basis.dimension();
    if raw.nrows() != d || raw.ncols() != d {
        return Err(ChiError::Shape { rows: raw.nrows(), cols: raw.ncols(), dim: d });
    }
    let eig = linalg::eigh(raw);
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 1e-14 * (1.0 + linalg::max_abs(raw)) {
        return Err(ChiError::DegenerateInput);
    }
    let mut entries = DMatrix::<Complex64>::zeros(d, d);
    for (k, &l) in clipped.iter().enumerate() {
        if l > 0.0 {
            let v: DVector<Complex64> = eig.vectors.column(k).into();
            entries += linalg::outer(&v) * Complex64::new(l / total, 0.0);
        }
    }
    let tr = linalg::trace_re(&entries);
    entries /= Complex64::new(tr, 0.0);
    Ok(SubtractionMatrix::from_congruence(entries, basis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{make_band_basis, FrequencyGrid};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn test_basis(d: usize) -> Arc<ModeBasis> {
        let grid = FrequencyGrid::default_input();
        Arc::new(make_band_basis(d, 786.0, 804.0, &grid).unwrap())
    }

    fn cvec(entries: &[(f64, f64)]) -> DVector<Complex64> {
        DVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| Complex64::new(re, im)))
    }

    pub(crate) fn random_unit(d: usize, rng: &mut impl RngExt) -> DVector<Complex64> {
        loop {
            let v = DVector::from_fn(d, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n > 1e-3 {
                return v / Complex64::new(n, 0.0);
            }
        }
    }

    #[test]
    fn single_mode_subtraction_is_a_projector() {
        let basis = test_basis(3);
        let op = AnnihilationOp::basis_mode(0, basis).unwrap();
        let chi = chi_from_mixture(&OperatorMixture::pure(op));
        assert_relative_eq!(chi.entries()[(0, 0)].re, 1.0, epsilon = 1e-12);
        for (i, j) in [(0, 1), (1, 1), (2, 2), (1, 2)] {
            assert!(chi.entries()[(i, j)].norm() < 1e-14);
        }
    }

    #[test]
    fn incoherent_mixture_is_maximally_mixed() {
        let d = 4;
        let basis = test_basis(d);
        let terms: Vec<(f64, AnnihilationOp)> = (0..d)
            .map(|i| (1.0 / d as f64, AnnihilationOp::basis_mode(i, basis.clone()).unwrap()))
            .collect();
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        for i in 0..d {
            for j in 0..d {
                let want = if i == j { 0.25 } else { 0.0 };
                assert!((chi.entries()[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn balanced_superposition_has_negative_coherences() {
        let basis = test_basis(2);
        let inv = 1.0 / 2.0f64.sqrt();
        let op = AnnihilationOp::new(cvec(&[(inv, 0.0), (-inv, 0.0)]), basis).unwrap();
        let chi = chi_from_mixture(&OperatorMixture::pure(op));
        for (i, j, want) in [(0, 0, 0.5), (0, 1, -0.5), (1, 0, -0.5), (1, 1, 0.5)] {
            assert_relative_eq!(chi.entries()[(i, j)].re, want, epsilon = 1e-12);
            assert_relative_eq!(chi.entries()[(i, j)].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn purity_of_maximal_mixture_in_25_modes() {
        let d = 25;
        let basis = test_basis(d);
        let terms: Vec<(f64, AnnihilationOp)> = (0..d)
            .map(|i| (1.0 / d as f64, AnnihilationOp::basis_mode(i, basis.clone()).unwrap()))
            .collect();
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        assert_relative_eq!(purity(&chi), 0.04, epsilon = 1e-12);
        assert_relative_eq!(effective_mode_count(&chi), 25.0, epsilon = 1e-9);
    }

    #[test]
    fn purity_of_rank_one_is_one() {
        let basis = test_basis(5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let op = AnnihilationOp::new(random_unit(5, &mut rng), basis).unwrap();
        let chi = chi_from_mixture(&OperatorMixture::pure(op));
        assert_relative_eq!(purity(&chi), 1.0, epsilon = 1e-12);
        assert_relative_eq!(effective_mode_count(&chi), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn purity_of_diagonal_two_mode_chi() {
        let basis = test_basis(2);
        let terms = alloc::vec![
            (0.7, AnnihilationOp::basis_mode(0, basis.clone()).unwrap()),
            (0.3, AnnihilationOp::basis_mode(1, basis.clone()).unwrap()),
        ];
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        assert_relative_eq!(purity(&chi), 0.58, epsilon = 1e-12);
        assert_relative_eq!(effective_mode_count(&chi), 1.0 / 0.58, epsilon = 1e-9);
    }

    #[test]
    fn dominant_mode_of_rank_one_matrix() {
        let basis = test_basis(2);
        let inv = 1.0 / 2.0f64.sqrt();
        let op = AnnihilationOp::new(cvec(&[(inv, 0.0), (-inv, 0.0)]), basis).unwrap();
        let chi = chi_from_mixture(&OperatorMixture::pure(op));
        let dm = dominant_mode(&chi);
        assert_relative_eq!(dm.selectivity, 1.0, epsilon = 1e-10);
        assert!(!dm.degenerate);
        // phase convention: largest-magnitude entry real positive -> (1, -1)/√2
        assert_relative_eq!(dm.op.coeffs()[0].re, inv, epsilon = 1e-10);
        assert_relative_eq!(dm.op.coeffs()[1].re, -inv, epsilon = 1e-10);
    }

    #[test]
    fn dominant_mode_flags_degeneracy() {
        let basis = test_basis(2);
        let terms = alloc::vec![
            (0.5, AnnihilationOp::basis_mode(0, basis.clone()).unwrap()),
            (0.5, AnnihilationOp::basis_mode(1, basis.clone()).unwrap()),
        ];
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        let dm = dominant_mode(&chi);
        assert_relative_eq!(dm.selectivity, 0.5, epsilon = 1e-12);
        assert!(dm.degenerate);
    }

    #[test]
    fn dominant_mode_recovers_planted_eigenvector() {
        let d = 6;
        let basis = test_basis(d);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = random_unit(d, &mut rng);
        // orthogonal complement vector
        let mut w = random_unit(d, &mut rng);
        let proj = v.dotc(&w);
        w -= &v * proj;
        let n: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        w /= Complex64::new(n, 0.0);
        let terms = alloc::vec![
            (0.9, AnnihilationOp::new(v.clone(), basis.clone()).unwrap()),
            (0.1, AnnihilationOp::new(w, basis.clone()).unwrap()),
        ];
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        let dm = dominant_mode(&chi);
        assert_relative_eq!(dm.selectivity, 0.9, epsilon = 1e-10);
        let align = dm.op.coeffs().dotc(&v).norm();
        assert_relative_eq!(align, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn self_fidelity_is_one() {
        let d = 4;
        let basis = test_basis(d);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut terms = Vec::new();
        let raw: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        for p in raw {
            terms.push((p / total, AnnihilationOp::new(random_unit(d, &mut rng), basis.clone()).unwrap()));
        }
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        assert_relative_eq!(fidelity(&chi, &chi).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn orthogonal_projectors_have_zero_fidelity() {
        let basis = test_basis(2);
        let a = chi_from_mixture(&OperatorMixture::pure(
            AnnihilationOp::basis_mode(0, basis.clone()).unwrap(),
        ));
        let b = chi_from_mixture(&OperatorMixture::pure(
            AnnihilationOp::basis_mode(1, basis.clone()).unwrap(),
        ));
        assert!(fidelity(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn rank_one_fidelity_matches_overlap_formula() {
        let d = 5;
        let basis = test_basis(d);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_unit(d, &mut rng);
            let v = random_unit(d, &mut rng);
            let a = chi_from_mixture(&OperatorMixture::pure(
                AnnihilationOp::new(u.clone(), basis.clone()).unwrap(),
            ));
            let b = chi_from_mixture(&OperatorMixture::pure(
                AnnihilationOp::new(v.clone(), basis.clone()).unwrap(),
            ));
            let want = u.dotc(&v).norm_sqr();
            // √χ at a zero eigenvalue is accurate only to √ε_machine
            assert_relative_eq!(fidelity(&a, &b).unwrap(), want, epsilon = 1e-7);
        }
    }

    #[test]
    fn success_probability_diagonal_probe() {
        let basis = test_basis(2);
        let chi = chi_from_mixture(&OperatorMixture::pure(
            AnnihilationOp::basis_mode(0, basis).unwrap(),
        ));
        let b = cvec(&[(1.0, 0.0), (0.0, 0.0)]);
        assert_relative_eq!(success_probability(&chi, &b, 4.0).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn dark_probe_gives_zero() {
        let basis = test_basis(2);
        let inv = 1.0 / 2.0f64.sqrt();
        let chi = chi_from_mixture(&OperatorMixture::pure(
            AnnihilationOp::new(cvec(&[(inv, 0.0), (-inv, 0.0)]), basis).unwrap(),
        ));
        let b = cvec(&[(inv, 0.0), (inv, 0.0)]);
        assert!(success_probability(&chi, &b, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn success_probability_matches_mixture_average() {
        let d = 4;
        let basis = test_basis(d);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let terms = alloc::vec![
            (0.6, AnnihilationOp::new(random_unit(d, &mut rng), basis.clone()).unwrap()),
            (0.4, AnnihilationOp::new(random_unit(d, &mut rng), basis.clone()).unwrap()),
        ];
        let mix = OperatorMixture::new(terms).unwrap();
        let chi = chi_from_mixture(&mix);
        for _ in 0..5 {
            let b = random_unit(d, &mut rng);
            // oracle: a coherent probe is an eigenstate of each Â_n with
            // eigenvalue β Σ_i c_ni b_i, so the rate is Σ_n p_n |Σ_i c_ni b_i|²
            let mut oracle = 0.0;
            for (p, op) in mix.terms() {
                let amp: Complex64 = op
                    .coeffs()
                    .iter()
                    .zip(b.iter())
                    .map(|(c, bi)| c * bi)
                    .sum();
                oracle += p * amp.norm_sqr();
            }
            let got = success_probability(&chi, &b, 1.7).unwrap();
            assert_relative_eq!(got, 1.7 * oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn unnormalized_probe_rejected() {
        let basis = test_basis(2);
        let chi = chi_from_mixture(&OperatorMixture::pure(
            AnnihilationOp::basis_mode(0, basis).unwrap(),
        ));
        let b = cvec(&[(1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            success_probability(&chi, &b, 1.0),
            Err(ChiError::ProbeNorm(_))
        ));
    }

    #[test]
    fn projection_fixes_invalid_diagonal() {
        let basis = test_basis(2);
        let raw = DMatrix::from_diagonal(&cvec(&[(1.2, 0.0), (-0.2, 0.0)]));
        let chi = project_to_physical(&raw, basis).unwrap();
        assert_relative_eq!(chi.entries()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(chi.entries()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn projection_is_identity_on_valid_chi() {
        let d = 4;
        let basis = test_basis(d);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let terms = alloc::vec![
            (0.5, AnnihilationOp::new(random_unit(d, &mut rng), basis.clone()).unwrap()),
            (0.5, AnnihilationOp::new(random_unit(d, &mut rng), basis.clone()).unwrap()),
        ];
        let chi = chi_from_mixture(&OperatorMixture::new(terms).unwrap());
        let back = project_to_physical(chi.entries(), basis).unwrap();
        let dev = (back.entries() - chi.entries())
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        assert!(dev < 1e-12, "deviation {dev}");
    }

    #[test]
    fn projection_rejects_nonpositive_input() {
        let basis = test_basis(2);
        let raw = DMatrix::from_diagonal(&cvec(&[(-1.0, 0.0), (-0.5, 0.0)]));
        assert!(matches!(
            project_to_physical(&raw, basis),
            Err(ChiError::DegenerateInput)
        ));
    }

    #[test]
    fn projection_beats_clip_then_scale_family() {
        // Brute-force oracle at d = 2: among candidates that zero out the
        // spectrum below a threshold τ and rescale, τ = 0 is Frobenius-closest.
        let basis = test_basis(2);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let m = DMatrix::from_fn(2, 2, |_, _| {
                Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
            });
            let h = linalg::hermitize(&m);
            let ours = match project_to_physical(&h, basis.clone()) {
                Ok(chi) => chi,
                Err(_) => continue,
            };
            let our_dist = (&h - ours.entries()).iter().map(|z| z.norm_sqr()).sum::<f64>();
            let eig = linalg::eigh(&h);
            let lmax = eig.values[1];
            for step in 0..50 {
                let tau = lmax * step as f64 / 50.0;
                let kept: Vec<f64> = eig.values.iter().map(|&l| if l >= tau { l.max(0.0) } else { 0.0 }).collect();
                let total: f64 = kept.iter().sum();
                if total <= 0.0 {
                    continue;
                }
                let mut cand = DMatrix::<Complex64>::zeros(2, 2);
                for (k, &l) in kept.iter().enumerate() {
                    if l > 0.0 {
                        let v: DVector<Complex64> = eig.vectors.column(k).into();
                        cand += linalg::outer(&v) * Complex64::new(l / total, 0.0);
                    }
                }
                let dist = (&h - &cand).iter().map(|z| z.norm_sqr()).sum::<f64>();
                assert!(our_dist <= dist + 1e-12, "τ = {tau} beats the τ=0 projection");
            }
        }
    }
}
