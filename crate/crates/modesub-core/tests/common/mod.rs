//! Shared helpers for the integration suites.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use modesub_core::chi::{chi_from_mixture, AnnihilationOp, OperatorMixture, SubtractionMatrix};
use modesub_core::modes::{make_band_basis, FrequencyGrid, ModeBasis};
use modesub_core::tomography::{expected_rate, standard_probe_set, CountRecord, TomographySettings};

pub fn band_basis(d: usize) -> Arc<ModeBasis> {
    let grid = FrequencyGrid::default_input();
    Arc::new(make_band_basis(d, 786.0, 804.0, &grid).unwrap())
}

/// Rank-1 projector onto (1/√d)Σ(−1)ⁱe_i.
pub fn alternating_projector(d: usize, basis: &Arc<ModeBasis>) -> SubtractionMatrix {
    let c = DVector::from_fn(d, |i, _| {
        Complex64::new(if i % 2 == 0 { 1.0 } else { -1.0 } / (d as f64).sqrt(), 0.0)
    });
    chi_from_mixture(&OperatorMixture::pure(AnnihilationOp::new(c, basis.clone()).unwrap()))
}

/// Noiseless records whose expected counts are integral by construction.
pub fn exact_records(chi: &SubtractionMatrix, x: f64, kappa: f64, shots: u64) -> Vec<CountRecord> {
    let probes = standard_probe_set(chi.dim(), x);
    let settings = TomographySettings { kappa, dark_rate: 0.0, shots, seed: 0 };
    probes
        .into_iter()
        .map(|p| {
            let mu = expected_rate(chi, &p, &settings).unwrap();
            let rounded = mu.round();
            assert!((mu - rounded).abs() < 1e-6, "expected count {mu} is not integral");
            CountRecord { probe: p, counts: rounded as u64, shots }
        })
        .collect()
}

/// Dyadic-valued χ at dimension d ≥ 3 whose standard-probe rates are all
/// dyadic rationals (so shot counts can be made exactly integral).
pub fn dyadic_chi(basis: &Arc<ModeBasis>) -> SubtractionMatrix {
    let d = basis.dimension();
    assert!(d >= 3);
    let inv2 = Complex64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let mut c_real = DVector::zeros(d);
    c_real[0] = inv2;
    c_real[1] = inv2;
    let mut c_phase = DVector::zeros(d);
    c_phase[0] = inv2;
    c_phase[2] = Complex64::new(0.0, 1.0 / 2.0f64.sqrt());
    chi_from_mixture(
        &OperatorMixture::new(vec![
            (0.5, AnnihilationOp::new(c_real, basis.clone()).unwrap()),
            (0.25, AnnihilationOp::new(c_phase, basis.clone()).unwrap()),
            (0.25, AnnihilationOp::basis_mode(1, basis.clone()).unwrap()),
        ])
        .unwrap(),
    )
}

pub fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
