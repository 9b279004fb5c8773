//! Error-to-exit-code mapping.
//!
//! Exit codes: 0 success, 2 config/schema error, 3 numerical failure
//! (no signal, degenerate data, non-convergence), 4 resolution/truncation.

use modesub_core::calibration::CalibrationError;
use modesub_core::chi::ChiError;
use modesub_core::fock::FockError;
use modesub_core::modes::ModeError;
use modesub_core::sfg::SfgError;
use modesub_core::tomography::TomographyError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOLUTION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Chi(#[from] ChiError),
    #[error(transparent)]
    Sfg(#[from] SfgError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Mode(e) => match e {
                ModeError::Truncated(_) | ModeError::BandResolution { .. } => EXIT_RESOLUTION,
                ModeError::DegenerateProjection => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            },
            CliError::Chi(e) => match e {
                ChiError::DegenerateInput => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            },
            CliError::Sfg(e) => match e {
                SfgError::Resolution { .. } => EXIT_RESOLUTION,
                SfgError::DegenerateKernel | SfgError::BasisCoverage { .. } | SfgError::NotNormalized(_) => {
                    EXIT_NUMERICAL
                }
                SfgError::Mode(inner) => CliError::Mode(inner.clone()).exit_code(),
                SfgError::Chi(inner) => CliError::Chi(inner.clone()).exit_code(),
                _ => EXIT_CONFIG,
            },
            CliError::Fock(e) => match e {
                FockError::TruncationTail { .. } => EXIT_RESOLUTION,
                FockError::HeraldImpossible(_) | FockError::UndefinedHerald(_) => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            },
            CliError::Tomography(e) => match e {
                TomographyError::NoSignal(_) | TomographyError::Overflow(_) => EXIT_NUMERICAL,
                TomographyError::Chi(inner) => CliError::Chi(inner.clone()).exit_code(),
                _ => EXIT_CONFIG,
            },
            CliError::Calibration(e) => match e {
                CalibrationError::ModelMismatch(_) | CalibrationError::NoSignal => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
