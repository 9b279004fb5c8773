//! Small dense-matrix helpers shared across modules.
//!
//! Everything here is a thin, deterministic wrapper over nalgebra's
//! Hermitian eigendecomposition; dimensions stay small (d ≤ a few hundred),
//! so stability is preferred over speed throughout.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// resolves f64 math in no_std builds; std builds see the inherent methods
#[allow(unused_imports)]
use num_traits::Float;

/// (M + M†)/2.
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn trace_re(m: &DMatrix<Complex64>) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Largest |entry| of M − M†.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct Eigh {
    /// Real eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, ordered like `values`.
    pub vectors: DMatrix<Complex64>,
}

/// Hermitian eigendecomposition. The input is hermitized first so that
/// matrices carrying ~1e-15 of floating-point skew are accepted.
pub fn eigh(m: &DMatrix<Complex64>) -> Eigh {
    let h = hermitize(m);
    let se = h.symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .expect("hermitian eigenvalues are finite")
    });
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Eigh { values, vectors }
}

/// Σ f(λ_k) v_k v_k† for a Hermitian matrix.
pub fn matrix_function(m: &DMatrix<Complex64>, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let Eigh { values, vectors } = eigh(m);
    let n = values.len();
    let diag = DVector::from_iterator(n, values.iter().map(|&l| Complex64::new(f(l), 0.0)));
    let scaled = {
        let mut s = vectors.clone();
        for (mut col, d) in s.column_iter_mut().zip(diag.iter()) {
            col *= *d;
        }
        s
    };
    scaled * vectors.adjoint()
}

/// Principal square root of a PSD Hermitian matrix; tiny negative
/// eigenvalues from floating-point noise are clamped to zero.
pub fn sqrt_psd(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    matrix_function(m, |l| l.max(0.0).sqrt())
}

/// ½ Σ |eig(A − B)| for Hermitian A, B.
pub fn trace_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let diff = a - b;
    0.5 * eigh(&diff).values.iter().map(|l| l.abs()).sum::<f64>()
}

/// v v†.
pub fn outer(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    v * v.adjoint()
}

/// Re(b† M b) — the quadratic form of a Hermitian matrix (real up to noise).
pub fn quadratic_form(m: &DMatrix<Complex64>, b: &DVector<Complex64>) -> f64 {
    (b.adjoint() * m * b)[(0, 0)].re
}

/// Σ_ij M_ij b_i b*_j — the subtraction-rate pairing. Equals the quadratic
/// form evaluated at conj(b); the two coincide only for real M.
pub fn subtraction_form(m: &DMatrix<Complex64>, b: &DVector<Complex64>) -> f64 {
    let u = b.map(|z| z.conj());
    quadratic_form(m, &u)
}
