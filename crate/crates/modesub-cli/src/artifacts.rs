//! File artifacts: the shipped schemas and their writers/readers.
//!
//! Every JSON artifact round-trips through the typed structs below (unknown
//! fields rejected), which is what "validates against the shipped schema"
//! means here; the CLI tests re-parse everything they emit.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use modesub_core::chi::SubtractionMatrix;
use modesub_core::modes::{BasisKind, FrequencyGrid, ModeBasis, SpectralMode};
use modesub_core::tomography::{CountRecord, ProbeSpec};

use crate::error::{io_err, CliError};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridJson {
    pub center: f64,
    pub span: f64,
    pub n: usize,
}

/// Mode-basis schema: {kind, grid:{center,span,n}, modes:[[re,im],...], labels}.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisJson {
    pub kind: String,
    pub grid: GridJson,
    pub modes: Vec<Vec<[f64; 2]>>,
    pub labels: Vec<String>,
}

impl BasisJson {
    pub fn from_basis(basis: &ModeBasis) -> Self {
        let g = basis.grid();
        Self {
            kind: match basis.kind() {
                BasisKind::HermiteGauss => "hermite_gauss".into(),
                BasisKind::WavelengthBand => "wavelength_band".into(),
                BasisKind::Custom => "custom".into(),
            },
            grid: GridJson { center: g.center_nm(), span: g.span_nm(), n: g.n_points() },
            modes: basis
                .modes()
                .iter()
                .map(|m| m.amplitude().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
            labels: basis.labels().to_vec(),
        }
    }

    pub fn into_basis(self) -> Result<Arc<ModeBasis>, CliError> {
        let grid = FrequencyGrid::new(self.grid.center, self.grid.span, self.grid.n)?;
        let kind = match self.kind.as_str() {
            "hermite_gauss" => BasisKind::HermiteGauss,
            "wavelength_band" => BasisKind::WavelengthBand,
            "custom" => BasisKind::Custom,
            other => return Err(CliError::config(format!("unknown basis kind {other:?}"))),
        };
        let modes = self
            .modes
            .into_iter()
            .map(|amps| {
                let v = nalgebra::DVector::from_iterator(
                    amps.len(),
                    amps.iter().map(|[re, im]| Complex64::new(*re, *im)),
                );
                SpectralMode::new(grid, v).map_err(CliError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Arc::new(ModeBasis::new(kind, modes, self.labels)?))
    }
}

/// Subtraction-matrix schema: {basis_ref, re: d×d, im: d×d}.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiJson {
    /// Path (relative to this artifact) of the basis JSON it refers to.
    pub basis_ref: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ChiJson {
    pub fn from_chi(chi: &SubtractionMatrix, basis_ref: &str) -> Self {
        let d = chi.dim();
        let e = chi.entries();
        Self {
            basis_ref: basis_ref.into(),
            re: (0..d).map(|i| (0..d).map(|j| e[(i, j)].re).collect()).collect(),
            im: (0..d).map(|i| (0..d).map(|j| e[(i, j)].im).collect()).collect(),
        }
    }

    pub fn into_chi(self, basis: Arc<ModeBasis>) -> Result<SubtractionMatrix, CliError> {
        let d = basis.dimension();
        if self.re.len() != d || self.im.len() != d {
            return Err(CliError::config(format!(
                "χ is {}×{} but the basis has {d} modes",
                self.re.len(),
                self.re.first().map_or(0, Vec::len)
            )));
        }
        let entries = DMatrix::from_fn(d, d, |i, j| Complex64::new(self.re[i][j], self.im[i][j]));
        Ok(SubtractionMatrix::new(entries, basis)?)
    }
}

/// SFG run metrics.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfgMetricsJson {
    pub p0: f64,
    pub purity: f64,
    pub effective_mode_count: f64,
    pub fidelity_to_ideal: Option<f64>,
    pub dominant_leakage: f64,
    pub schmidt_residual: f64,
    pub truncation_warning: bool,
    pub dominant_degenerate: bool,
}

/// Reconstruction diagnostics.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsJson {
    pub kappa_hat: f64,
    pub iterations: usize,
    pub final_nll: f64,
    pub monotone: bool,
    pub converged: bool,
}

/// Round-trip report.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundTripJson {
    pub fidelity_to_truth: f64,
    pub kappa_hat: f64,
    pub converged: bool,
}

/// Calibration fit result: {w0,w1,w2,kappa,stderr,flags}.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitJson {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    pub kappa: f64,
    pub stderr: [f64; 3],
    pub flags: FitFlags,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFlags {
    pub w2_unidentifiable: bool,
    pub converged: bool,
}

/// Negativity summary.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegativityJson {
    pub r_false: f64,
    pub r_corr: f64,
    pub w00: f64,
    pub w00_times_2pi: f64,
}

/// χ metrics report (the `metrics` subcommand).
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChiMetricsJson {
    pub purity: f64,
    pub effective_mode_count: f64,
    pub p0: f64,
    pub dominant_degenerate: bool,
    pub fidelity_to_reference: Option<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::config(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn write_chi_csv(path: &Path, chi: &SubtractionMatrix) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["i", "j", "re", "im"]).map_err(|e| csv_err(path, e))?;
    let d = chi.dim();
    for i in 0..d {
        for j in 0..d {
            let z = chi.entries()[(i, j)];
            w.write_record(&[i.to_string(), j.to_string(), z.re.to_string(), z.im.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Records CSV: probe_id, d, b_re[0..d), b_im[0..d), mean_photons, shots, counts.
pub fn write_records_csv(path: &Path, records: &[CountRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let d = records.first().map_or(0, |r| r.probe.dim());
    let mut header = vec!["probe_id".to_string(), "d".to_string()];
    header.extend((0..d).map(|i| format!("b_re{i}")));
    header.extend((0..d).map(|i| format!("b_im{i}")));
    header.extend(["mean_photons".into(), "shots".into(), "counts".into()]);
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (m, rec) in records.iter().enumerate() {
        let mut row = vec![m.to_string(), d.to_string()];
        row.extend(rec.probe.b().iter().map(|z| z.re.to_string()));
        row.extend(rec.probe.b().iter().map(|z| z.im.to_string()));
        row.push(rec.probe.mean_photons().to_string());
        row.push(rec.shots.to_string());
        row.push(rec.counts.to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records_csv(path: &Path) -> Result<Vec<CountRecord>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let get = |name: &str| -> Result<f64, CliError> {
            let idx = headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::config(format!("records CSV misses column {name}")))?;
            row.get(idx)
                .ok_or_else(|| CliError::config(format!("short row in records CSV")))?
                .parse::<f64>()
                .map_err(|e| CliError::config(format!("column {name}: {e}")))
        };
        let d = get("d")? as usize;
        let mut b = nalgebra::DVector::<Complex64>::zeros(d);
        for i in 0..d {
            let re = get(&format!("b_re{i}"))?;
            let im = get(&format!("b_im{i}"))?;
            b[i] = Complex64::new(re, im);
        }
        let probe = ProbeSpec::new(b, get("mean_photons")?)?;
        records.push(CountRecord {
            probe,
            counts: get("counts")? as u64,
            shots: get("shots")? as u64,
        });
    }
    Ok(records)
}

pub fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::config(format!("{}: {e}", path.display()))
}

pub fn load_chi(path: &Path) -> Result<(SubtractionMatrix, Arc<ModeBasis>), CliError> {
    let chi_json: ChiJson = crate::config::load(path)?;
    let basis_path = path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(&chi_json.basis_ref);
    let basis_json: BasisJson = crate::config::load(&basis_path)?;
    let basis = basis_json.into_basis()?;
    let chi = chi_json.into_chi(basis.clone())?;
    Ok((chi, basis))
}
