//! Property suite for the calibration fit.

mod common;

use common::median;
use modesub_core::calibration::{fit_weights, herald_rate, synth_curve, RealisticWeights};

const PAPER_GRID: [f64; 7] = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 90.0];

/// Fitted weights sit on the simplex to machine precision for every seed —
/// a property of the parameterization, not of post-hoc normalization.
#[test]
fn fitted_weights_satisfy_simplex_exactly() {
    let truth = RealisticWeights::new(0.03, 0.95, 0.02).unwrap();
    for seed in 0..10u64 {
        let curve = synth_curve(&truth, 0.9, 1.0, &PAPER_GRID, 20_000, seed, false).unwrap();
        let fit = fit_weights(&curve, 0.9).unwrap();
        let sum = fit.weights.w0 + fit.weights.w1 + fit.weights.w2;
        assert!((sum - 1.0).abs() < 1e-12, "seed {seed}: Σw = {sum}");
        assert!(fit.weights.w0 >= 0.0 && fit.weights.w1 >= 0.0 && fit.weights.w2 >= 0.0);
    }
}

/// The rate model is convex and non-decreasing in x for any simplex weights.
#[test]
fn model_rate_is_convex_for_random_weights() {
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..50 {
        let a = rng.random::<f64>();
        let b = rng.random::<f64>() * (1.0 - a);
        let w = RealisticWeights::new(a, b, 1.0 - a - b).unwrap();
        let p0 = rng.random::<f64>();
        let xs: Vec<f64> = (0..30).map(|k| 0.05 * (k * k) as f64 + 0.1).collect();
        let rates: Vec<f64> = xs.iter().map(|&x| herald_rate(&w, p0, x, 2.0)).collect();
        for k in 1..rates.len() {
            assert!(rates[k] >= rates[k - 1] - 1e-12);
        }
    }
}

/// Self-consistency: refitting data regenerated from a fitted model
/// reproduces the weights within twice their standard errors (median over
/// seeds).
#[test]
fn refit_is_self_consistent_within_two_stderr() {
    // identifiable truth with a visible quadratic term
    let truth = RealisticWeights::new(0.02, 0.93, 0.05).unwrap();
    let base = synth_curve(&truth, 0.9, 1.0, &PAPER_GRID, 50_000, 0, false).unwrap();
    let first = fit_weights(&base, 0.9).unwrap();
    assert!(!first.w2_unidentifiable);
    let model = first.weights;

    let mut pulls: Vec<[f64; 3]> = Vec::new();
    for seed in 1..=11u64 {
        let regen = synth_curve(&model, 0.9, first.kappa_hat, &PAPER_GRID, 50_000, seed, false).unwrap();
        let refit = fit_weights(&regen, 0.9).unwrap();
        let w = [refit.weights.w0, refit.weights.w1, refit.weights.w2];
        let m = [model.w0, model.w1, model.w2];
        let mut pull = [0.0f64; 3];
        for i in 0..3 {
            let se = refit.stderr[i].max(1e-12);
            pull[i] = (w[i] - m[i]).abs() / se;
        }
        pulls.push(pull);
    }
    for i in 0..3 {
        let med = median(pulls.iter().map(|p| p[i]).collect());
        assert!(med <= 2.0, "weight {i}: median pull {med}");
    }
}

/// The reported standard errors shrink with acquisition size.
#[test]
fn stderr_scales_with_statistics() {
    let truth = RealisticWeights::new(0.02, 0.93, 0.05).unwrap();
    let small = synth_curve(&truth, 0.9, 1.0, &PAPER_GRID, 5_000, 3, false).unwrap();
    let large = synth_curve(&truth, 0.9, 1.0, &PAPER_GRID, 500_000, 3, false).unwrap();
    let fit_small = fit_weights(&small, 0.9).unwrap();
    let fit_large = fit_weights(&large, 0.9).unwrap();
    for i in 0..3 {
        assert!(
            fit_large.stderr[i] < fit_small.stderr[i],
            "stderr {i} did not shrink: {} vs {}",
            fit_large.stderr[i],
            fit_small.stderr[i]
        );
    }
}
