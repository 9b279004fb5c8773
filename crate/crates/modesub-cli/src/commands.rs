//! The five subcommand workflows.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use modesub_core::calibration::{
    fit_weights, herald_rate, synth_curve, CalibrationCurve, CurvePoint, RealisticWeights,
};
use modesub_core::chi::{
    chi_from_mixture, dominant_mode, effective_mode_count, fidelity, purity, AnnihilationOp,
    OperatorMixture, SubtractionMatrix,
};
use modesub_core::fock::{heralded_state, wigner_grid, wigner_origin, LossChain, SqueezeParams, TAIL_TOL};
use modesub_core::modes::{same_basis, ModeBasis};
use modesub_core::sfg::{build_transfer, induced_from_schmidt, schmidt_decompose};
use modesub_core::tomography::{
    mle_reconstruct, simulate_counts, standard_probe_set, CountRecord, MleOptions,
    TomographySettings,
};

use crate::artifacts::{
    self, write_json, BasisJson, ChiJson, ChiMetricsJson, DiagnosticsJson, FitFlags, FitJson,
    NegativityJson, RoundTripJson, SfgMetricsJson,
};
use crate::config::{CalibrateCfg, ChiSpec, MetricsCfg, NegativityCfg, SfgCfg, TomoCfg};
use crate::error::{io_err, CliError};
use crate::Summary;

pub fn cmd_sfg(cfg: &SfgCfg, out: &Path) -> Result<Summary, CliError> {
    let (sfg_cfg, basis) = cfg.build()?;
    let tf = build_transfer(&sfg_cfg)?;

    // heatmap export, strided to keep files plottable
    let path = out.join("transfer.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
    w.write_record(["lambda_in_nm", "lambda_up_nm", "re", "im"])
        .map_err(|e| artifacts::csv_err(&path, e))?;
    let (n_in, n_up) = (tf.in_grid().n_points(), tf.up_grid().n_points());
    let cap = cfg.transfer_export_max.max(2);
    let stride_in = n_in.div_ceil(cap);
    let stride_up = n_up.div_ceil(cap);
    for i in (0..n_in).step_by(stride_in) {
        for j in (0..n_up).step_by(stride_up) {
            let z = tf.values()[(i, j)];
            w.write_record(&[
                tf.in_grid().wavelength_nm(i).to_string(),
                tf.up_grid().wavelength_nm(j).to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ])
            .map_err(|e| artifacts::csv_err(&path, e))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let sd = schmidt_decompose(&tf, cfg.n_keep)?;
    let path = out.join("schmidt_weights.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
    w.write_record(["index", "weight"]).map_err(|e| artifacts::csv_err(&path, e))?;
    for (n, weight) in sd.weights.iter().enumerate() {
        w.write_record(&[n.to_string(), weight.to_string()])
            .map_err(|e| artifacts::csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;

    let induced = induced_from_schmidt(sd, &basis)?;
    let dm = dominant_mode(&induced.chi);

    write_json(&out.join("basis.json"), &BasisJson::from_basis(&basis))?;
    write_json(&out.join("chi.json"), &ChiJson::from_chi(&induced.chi, "basis.json"))?;
    artifacts::write_chi_csv(&out.join("chi.csv"), &induced.chi)?;

    let path = out.join("dominant_op.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
    w.write_record(["index", "label", "prob", "phase_rad"])
        .map_err(|e| artifacts::csv_err(&path, e))?;
    for (i, c) in dm.op.coeffs().iter().enumerate() {
        w.write_record(&[
            i.to_string(),
            basis.labels()[i].clone(),
            c.norm_sqr().to_string(),
            c.arg().to_string(),
        ])
        .map_err(|e| artifacts::csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;

    let fidelity_to_ideal = match cfg.ideal_coeffs(basis.dimension()) {
        Some(coeffs) => {
            let v = nalgebra::DVector::from_vec(coeffs);
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let ideal = chi_from_mixture(&OperatorMixture::pure(AnnihilationOp::new(
                v / Complex64::new(norm, 0.0),
                basis.clone(),
            )?));
            Some(fidelity(&induced.chi, &ideal)?)
        }
        None => None,
    };

    let metrics = SfgMetricsJson {
        p0: induced.selectivity,
        purity: purity(&induced.chi),
        effective_mode_count: effective_mode_count(&induced.chi),
        fidelity_to_ideal,
        dominant_leakage: induced.dominant_leakage,
        schmidt_residual: induced.schmidt.residual,
        truncation_warning: induced.schmidt.truncation_warning,
        dominant_degenerate: dm.degenerate,
    };
    write_json(&out.join("metrics.json"), &metrics)?;

    Ok(Summary::new("sfg")
        .field("p0", metrics.p0)
        .field("purity", metrics.purity)
        .field_opt("fidelity_to_ideal", metrics.fidelity_to_ideal))
}

fn chi_from_spec(
    spec: &ChiSpec,
    basis: &Arc<ModeBasis>,
) -> Result<SubtractionMatrix, CliError> {
    match spec {
        ChiSpec::File { path } => {
            let (chi, loaded_basis) = artifacts::load_chi(Path::new(path))?;
            if loaded_basis.dimension() != basis.dimension() {
                return Err(CliError::config(format!(
                    "χ from {path} has dimension {} but the run basis has {}",
                    loaded_basis.dimension(),
                    basis.dimension()
                )));
            }
            Ok(chi)
        }
        ChiSpec::Projector { coeffs } => {
            if coeffs.len() != basis.dimension() {
                return Err(CliError::config(format!(
                    "projector has {} coefficients but the basis has {} modes",
                    coeffs.len(),
                    basis.dimension()
                )));
            }
            let v = nalgebra::DVector::from_iterator(
                coeffs.len(),
                coeffs.iter().map(|[re, im]| Complex64::new(*re, *im)),
            );
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm <= 0.0 {
                return Err(CliError::config("projector coefficients are all zero"));
            }
            Ok(chi_from_mixture(&OperatorMixture::pure(AnnihilationOp::new(
                v / Complex64::new(norm, 0.0),
                basis.clone(),
            )?)))
        }
        ChiSpec::Sfg(sfg_cfg) => {
            let (core_cfg, _) = sfg_cfg.build()?;
            let tf = build_transfer(&core_cfg)?;
            let sd = schmidt_decompose(&tf, sfg_cfg.n_keep)?;
            Ok(induced_from_schmidt(sd, basis)?.chi)
        }
    }
}

pub fn cmd_tomo_synth(cfg: &TomoCfg, out: &Path) -> Result<Summary, CliError> {
    let grid = cfg.grid.build()?;
    let basis = cfg.basis.build(&grid)?;
    let truth = chi_from_spec(&cfg.chi, &basis)?;
    let settings = TomographySettings::new(cfg.kappa, cfg.dark_rate, cfg.shots, cfg.seed)?;
    let probes = standard_probe_set(basis.dimension(), cfg.mean_photons);
    let records = simulate_counts(&truth, &probes, &settings)?;
    artifacts::write_records_csv(&out.join("records.csv"), &records)?;
    write_json(&out.join("basis.json"), &BasisJson::from_basis(&basis))?;
    write_json(&out.join("chi_truth.json"), &ChiJson::from_chi(&truth, "basis.json"))?;
    let total: u64 = records.iter().map(|r| r.counts).sum();
    Ok(Summary::new("tomo synth")
        .field("probes", records.len() as f64)
        .field("total_counts", total as f64))
}

fn reconstruct_records(
    records: &[CountRecord],
    cfg: &TomoCfg,
    basis: &Arc<ModeBasis>,
    out: &Path,
) -> Result<(SubtractionMatrix, DiagnosticsJson), CliError> {
    let opts = MleOptions { max_iters: cfg.max_iters, rel_tol: cfg.rel_tol };
    let result = mle_reconstruct(records, basis.clone(), cfg.dark_rate, &opts)?;
    let diagnostics = DiagnosticsJson {
        kappa_hat: result.kappa_hat,
        iterations: result.diagnostics.iterations,
        final_nll: result.diagnostics.final_nll,
        monotone: result.diagnostics.monotone,
        converged: result.diagnostics.converged,
    };
    write_json(&out.join("basis.json"), &BasisJson::from_basis(basis))?;
    write_json(&out.join("chi_reconstructed.json"), &ChiJson::from_chi(&result.chi, "basis.json"))?;
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    Ok((result.chi, diagnostics))
}

pub fn cmd_tomo_reconstruct(cfg: &TomoCfg, out: &Path) -> Result<Summary, CliError> {
    let records_path = cfg
        .records
        .as_ref()
        .ok_or_else(|| CliError::config("reconstruct needs a `records` CSV path"))?;
    let records = artifacts::read_records_csv(Path::new(records_path))?;
    let grid = cfg.grid.build()?;
    let basis = cfg.basis.build(&grid)?;
    let (_, diagnostics) = reconstruct_records(&records, cfg, &basis, out)?;
    if !diagnostics.converged {
        return Err(CliError::Numerical(format!(
            "MLE did not converge within {} iterations (artifacts were written)",
            cfg.max_iters
        )));
    }
    Ok(Summary::new("tomo reconstruct")
        .field("kappa_hat", diagnostics.kappa_hat)
        .field("iterations", diagnostics.iterations as f64))
}

pub fn cmd_tomo_round_trip(cfg: &TomoCfg, out: &Path) -> Result<Summary, CliError> {
    let grid = cfg.grid.build()?;
    let basis = cfg.basis.build(&grid)?;
    let truth = chi_from_spec(&cfg.chi, &basis)?;
    let settings = TomographySettings::new(cfg.kappa, cfg.dark_rate, cfg.shots, cfg.seed)?;
    let probes = standard_probe_set(basis.dimension(), cfg.mean_photons);
    let records = simulate_counts(&truth, &probes, &settings)?;
    artifacts::write_records_csv(&out.join("records.csv"), &records)?;
    write_json(&out.join("chi_truth.json"), &ChiJson::from_chi(&truth, "basis.json"))?;
    let (chi_hat, diagnostics) = reconstruct_records(&records, cfg, &basis, out)?;
    let f = fidelity(&chi_hat, &truth)?;
    let report = RoundTripJson {
        fidelity_to_truth: f,
        kappa_hat: diagnostics.kappa_hat,
        converged: diagnostics.converged,
    };
    write_json(&out.join("report.json"), &report)?;
    if !diagnostics.converged {
        return Err(CliError::Numerical(format!(
            "MLE did not converge within {} iterations (artifacts were written)",
            cfg.max_iters
        )));
    }
    Ok(Summary::new("tomo round-trip")
        .field("fidelity_to_truth", f)
        .field("kappa_hat", diagnostics.kappa_hat))
}

pub fn cmd_calibrate(cfg: &CalibrateCfg, out: &Path) -> Result<Summary, CliError> {
    let truth = RealisticWeights::new(cfg.truth.w0, cfg.truth.w1, cfg.truth.w2)?;
    let curve = match &cfg.curve {
        Some(path) => {
            let path = Path::new(path);
            let mut reader = csv::Reader::from_path(path).map_err(|e| artifacts::csv_err(path, e))?;
            let mut points = Vec::new();
            for row in reader.deserialize::<CurveRow>() {
                let row = row.map_err(|e| artifacts::csv_err(path, e))?;
                points.push(CurvePoint {
                    mean_photons: row.mean_photons,
                    counts: row.counts,
                    shots: row.shots,
                });
            }
            CalibrationCurve::new(points)?
        }
        None => {
            let curve = synth_curve(
                &truth,
                cfg.p0,
                cfg.kappa,
                &cfg.x_grid,
                cfg.shots,
                cfg.seed,
                cfg.noiseless,
            )?;
            let path = out.join("curve.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
            w.write_record(["mean_photons", "counts", "shots"])
                .map_err(|e| artifacts::csv_err(&path, e))?;
            for p in curve.points() {
                w.write_record(&[
                    p.mean_photons.to_string(),
                    p.counts.to_string(),
                    p.shots.to_string(),
                ])
                .map_err(|e| artifacts::csv_err(&path, e))?;
            }
            w.flush().map_err(io_err(&path))?;
            curve
        }
    };

    let fit = fit_weights(&curve, cfg.p0)?;
    let fit_json = FitJson {
        w0: fit.weights.w0,
        w1: fit.weights.w1,
        w2: fit.weights.w2,
        kappa: fit.kappa_hat,
        stderr: fit.stderr,
        flags: FitFlags { w2_unidentifiable: fit.w2_unidentifiable, converged: fit.converged },
    };
    write_json(&out.join("fit.json"), &fit_json)?;

    let path = out.join("residuals.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
    w.write_record(["mean_photons", "counts", "expected", "pearson"])
        .map_err(|e| artifacts::csv_err(&path, e))?;
    for p in curve.points() {
        let mu = p.shots as f64 * herald_rate(&fit.weights, cfg.p0, p.mean_photons, fit.kappa_hat);
        let pearson = if mu > 0.0 { (p.counts as f64 - mu) / mu.sqrt() } else { 0.0 };
        w.write_record(&[
            p.mean_photons.to_string(),
            p.counts.to_string(),
            mu.to_string(),
            pearson.to_string(),
        ])
        .map_err(|e| artifacts::csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;

    if !fit.converged {
        return Err(CliError::Numerical(
            "weight fit did not converge (artifacts were written)".into(),
        ));
    }
    Ok(Summary::new("calibrate")
        .field("w0", fit.weights.w0)
        .field("w1", fit.weights.w1)
        .field("w2", fit.weights.w2)
        .field("kappa", fit.kappa_hat))
}

pub fn cmd_negativity(cfg: &NegativityCfg, out: &Path) -> Result<Summary, CliError> {
    let params = SqueezeParams::new(cfg.squeezing_db, cfg.phase)?;
    let chain = LossChain::new(cfg.t_in, cfg.t_fi)?;
    let h = heralded_state(&params, cfg.w1, cfg.p0, &chain, cfg.n_max)?;
    let tail = h.state.tail_fraction();
    if tail > TAIL_TOL {
        return Err(CliError::Fock(modesub_core::fock::FockError::TruncationTail {
            n_max: cfg.n_max,
            tail,
        }));
    }
    let w00 = wigner_origin(&h.state);
    let report = NegativityJson {
        r_false: h.r_false,
        r_corr: h.r_corr,
        w00,
        w00_times_2pi: w00 * 2.0 * std::f64::consts::PI,
    };
    write_json(&out.join("negativity.json"), &report)?;

    if let Some(grid) = &cfg.wigner {
        if grid.n_x < 2 || grid.n_p < 2 {
            return Err(CliError::config("wigner grid needs at least 2×2 points"));
        }
        let xs: Vec<f64> = (0..grid.n_x)
            .map(|k| grid.x_min + (grid.x_max - grid.x_min) * k as f64 / (grid.n_x - 1) as f64)
            .collect();
        let ps: Vec<f64> = (0..grid.n_p)
            .map(|k| grid.p_min + (grid.p_max - grid.p_min) * k as f64 / (grid.n_p - 1) as f64)
            .collect();
        let values = wigner_grid(&h.state, &xs, &ps);
        let path = out.join("wigner.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| artifacts::csv_err(&path, e))?;
        w.write_record(["x", "p", "w"]).map_err(|e| artifacts::csv_err(&path, e))?;
        for (ix, &x) in xs.iter().enumerate() {
            for (ip, &p) in ps.iter().enumerate() {
                w.write_record(&[x.to_string(), p.to_string(), values[(ix, ip)].to_string()])
                    .map_err(|e| artifacts::csv_err(&path, e))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }

    Ok(Summary::new("negativity")
        .field("w00_times_2pi", report.w00_times_2pi)
        .field("r_false", report.r_false)
        .field("r_corr", report.r_corr))
}

pub fn cmd_metrics(cfg: &MetricsCfg, out: &Path) -> Result<Summary, CliError> {
    let (chi, basis) = artifacts::load_chi(Path::new(&cfg.chi))?;
    let dm = dominant_mode(&chi);
    let fidelity_to_reference = match &cfg.reference {
        Some(path) => {
            let (reference, ref_basis) = artifacts::load_chi(Path::new(path))?;
            if !same_basis(&basis, &ref_basis) {
                return Err(CliError::config(
                    "reference χ is expressed in a different basis",
                ));
            }
            Some(fidelity(&chi, &reference)?)
        }
        None => None,
    };
    let report = ChiMetricsJson {
        purity: purity(&chi),
        effective_mode_count: effective_mode_count(&chi),
        p0: dm.selectivity,
        dominant_degenerate: dm.degenerate,
        fidelity_to_reference,
    };
    write_json(&out.join("metrics.json"), &report)?;
    Ok(Summary::new("metrics")
        .field("purity", report.purity)
        .field("p0", report.p0)
        .field_opt("fidelity_to_reference", report.fidelity_to_reference))
}

#[derive(serde::Deserialize)]
struct CurveRow {
    mean_photons: f64,
    counts: u64,
    shots: u64,
}
