//! JSON run configurations.
//!
//! Every config validates strictly (unknown fields are rejected) and every
//! field has a default matching the reference operating point, so `{}` is a
//! valid config for each command.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use modesub_core::modes::{
    make_band_basis, make_hg_basis, FrequencyGrid, ModeBasis, SpectralMode,
};
use modesub_core::sfg::{self, SfgConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub center_nm: f64,
    pub span_nm: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn input_default() -> Self {
        let g = FrequencyGrid::default_input();
        Self { center_nm: g.center_nm(), span_nm: g.span_nm(), n_points: g.n_points() }
    }

    pub fn upconverted_default() -> Self {
        let g = FrequencyGrid::default_upconverted();
        Self { center_nm: g.center_nm(), span_nm: g.span_nm(), n_points: g.n_points() }
    }

    pub fn build(&self) -> Result<FrequencyGrid, CliError> {
        Ok(FrequencyGrid::new(self.center_nm, self.span_nm, self.n_points)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    HermiteGauss {
        d: usize,
        #[serde(default = "default_gate_center")]
        center_nm: f64,
        #[serde(default = "default_gate_fwhm")]
        fwhm_hg0_nm: f64,
    },
    WavelengthBand {
        d: usize,
        #[serde(default = "default_band_min")]
        lambda_min_nm: f64,
        #[serde(default = "default_band_max")]
        lambda_max_nm: f64,
    },
}

fn default_gate_center() -> f64 {
    sfg::DEFAULT_GATE_CENTER_NM
}
fn default_gate_fwhm() -> f64 {
    sfg::DEFAULT_GATE_FWHM_NM
}
fn default_band_min() -> f64 {
    786.0
}
fn default_band_max() -> f64 {
    804.0
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec::HermiteGauss {
            d: 7,
            center_nm: default_gate_center(),
            fwhm_hg0_nm: default_gate_fwhm(),
        }
    }
}

impl BasisSpec {
    pub fn build(&self, grid: &FrequencyGrid) -> Result<Arc<ModeBasis>, CliError> {
        let basis = match self {
            BasisSpec::HermiteGauss { d, center_nm, fwhm_hg0_nm } => {
                make_hg_basis(*d, *center_nm, *fwhm_hg0_nm, grid)?
            }
            BasisSpec::WavelengthBand { d, lambda_min_nm, lambda_max_nm } => {
                make_band_basis(*d, *lambda_min_nm, *lambda_max_nm, grid)?
            }
        };
        Ok(Arc::new(basis))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GateModeSpec {
    /// Hermite-Gaussian mode of the given order on the gate parameters.
    Hg(usize),
    /// Explicit amplitude samples on the input grid.
    Custom { amplitude: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateTermSpec {
    pub mode: GateModeSpec,
    pub re: f64,
    pub im: f64,
}

fn default_gate() -> Vec<GateTermSpec> {
    vec![GateTermSpec { mode: GateModeSpec::Hg(0), re: 1.0, im: 0.0 }]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SfgCfg {
    pub gate: Vec<GateTermSpec>,
    pub gate_center_nm: f64,
    pub gate_fwhm_hg0_nm: f64,
    pub filter_fwhm_nm: f64,
    pub pm_fwhm_nm: f64,
    pub up_center_nm: f64,
    pub in_grid: GridSpec,
    pub up_grid: GridSpec,
    pub basis: BasisSpec,
    pub n_keep: usize,
    /// Row/column cap of the exported transfer-function heatmap.
    pub transfer_export_max: usize,
}

impl Default for SfgCfg {
    fn default() -> Self {
        Self {
            gate: default_gate(),
            gate_center_nm: sfg::DEFAULT_GATE_CENTER_NM,
            gate_fwhm_hg0_nm: sfg::DEFAULT_GATE_FWHM_NM,
            filter_fwhm_nm: sfg::DEFAULT_FILTER_FWHM_NM,
            pm_fwhm_nm: sfg::DEFAULT_PM_FWHM_NM,
            up_center_nm: sfg::DEFAULT_UP_CENTER_NM,
            in_grid: GridSpec::input_default(),
            up_grid: GridSpec::upconverted_default(),
            basis: BasisSpec::default(),
            n_keep: sfg::DEFAULT_N_KEEP,
            transfer_export_max: 256,
        }
    }
}

impl SfgCfg {
    pub fn build(&self) -> Result<(SfgConfig, Arc<ModeBasis>), CliError> {
        let in_grid = self.in_grid.build()?;
        let up_grid = self.up_grid.build()?;
        let mut gate = Vec::with_capacity(self.gate.len());
        for term in &self.gate {
            let mode = match &term.mode {
                GateModeSpec::Hg(order) => modesub_core::modes::make_hg_mode(
                    *order,
                    self.gate_center_nm,
                    self.gate_fwhm_hg0_nm,
                    &in_grid,
                )?,
                GateModeSpec::Custom { amplitude } => {
                    let amp = nalgebra::DVector::from_iterator(
                        amplitude.len(),
                        amplitude.iter().map(|[re, im]| Complex64::new(*re, *im)),
                    );
                    SpectralMode::normalized(in_grid, amp)?
                }
            };
            gate.push((Complex64::new(term.re, term.im), mode));
        }
        let cfg = SfgConfig::new(
            gate,
            self.filter_fwhm_nm,
            self.pm_fwhm_nm,
            self.up_center_nm,
            in_grid,
            up_grid,
        )?;
        let basis = self.basis.build(&in_grid)?;
        Ok((cfg, basis))
    }

    /// Ideal annihilation-operator coefficients implied by an all-HG gate in
    /// an HG basis: c_i = (−1)^i · (gate coefficient of HG_i).
    pub fn ideal_coeffs(&self, d: usize) -> Option<Vec<Complex64>> {
        if !matches!(self.basis, BasisSpec::HermiteGauss { .. }) {
            return None;
        }
        let mut c = vec![Complex64::ZERO; d];
        for term in &self.gate {
            match term.mode {
                GateModeSpec::Hg(order) if order < d => {
                    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                    c[order] += Complex64::new(term.re, term.im) * sign;
                }
                _ => return None,
            }
        }
        Some(c)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiSpec {
    /// Load a previously written χ JSON artifact.
    File { path: String },
    /// Rank-1 projector onto the given coefficients (normalized).
    Projector { coeffs: Vec<[f64; 2]> },
    /// χ induced by an SFG configuration in the tomography basis.
    Sfg(Box<SfgCfg>),
}

impl Default for ChiSpec {
    fn default() -> Self {
        // the reference target: (1/√7) Σ (−1)^i e_i at d = 7
        ChiSpec::Projector {
            coeffs: (0..7)
                .map(|i| [if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoCfg {
    pub grid: GridSpec,
    pub basis: BasisSpec,
    pub chi: ChiSpec,
    pub mean_photons: f64,
    pub kappa: f64,
    pub dark_rate: f64,
    pub shots: u64,
    pub seed: u64,
    /// Records CSV consumed by `reconstruct`.
    pub records: Option<String>,
    pub max_iters: usize,
    pub rel_tol: f64,
}

impl Default for TomoCfg {
    fn default() -> Self {
        Self {
            grid: GridSpec::input_default(),
            basis: BasisSpec::default(),
            chi: ChiSpec::default(),
            mean_photons: 1.0,
            kappa: 1.0,
            dark_rate: 100.0 / 70_000.0,
            shots: 70_000,
            seed: 0,
            records: None,
            max_iters: 2000,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthWeights {
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Default for TruthWeights {
    fn default() -> Self {
        Self { w0: 0.01, w1: 0.9899, w2: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateCfg {
    pub p0: f64,
    pub truth: TruthWeights,
    pub kappa: f64,
    pub x_grid: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
    pub noiseless: bool,
    /// Curve CSV to ingest instead of synthesizing one.
    pub curve: Option<String>,
}

impl Default for CalibrateCfg {
    fn default() -> Self {
        Self {
            p0: 0.9,
            truth: TruthWeights::default(),
            kappa: 1.0,
            x_grid: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 90.0],
            shots: 11_100,
            seed: 0,
            noiseless: false,
            curve: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self { x_min: -5.0, x_max: 5.0, n_x: 81, p_min: -5.0, p_max: 5.0, n_p: 81 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NegativityCfg {
    pub squeezing_db: f64,
    pub phase: f64,
    pub w1: f64,
    pub p0: f64,
    pub t_in: f64,
    pub t_fi: f64,
    pub n_max: usize,
    /// Optional phase-space grid export.
    pub wigner: Option<WignerGridSpec>,
}

impl Default for NegativityCfg {
    fn default() -> Self {
        Self {
            squeezing_db: 4.0,
            phase: 0.0,
            w1: 0.99,
            p0: 0.9,
            t_in: 0.9,
            t_fi: 0.9,
            n_max: 30,
            wigner: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsCfg {
    /// χ JSON artifact to analyze.
    pub chi: String,
    /// Optional second χ for the fidelity report.
    pub reference: Option<String>,
    #[serde(default = "GridSpec::input_default")]
    pub grid: GridSpec,
    #[serde(default)]
    pub basis: BasisSpec,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}
