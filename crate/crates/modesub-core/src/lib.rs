//! Simulation and analysis of multimode coherent single-photon subtraction.
//!
//! The crate is organized around the *subtraction matrix* χ: a Hermitian,
//! positive-semidefinite, trace-one matrix that uniquely characterizes a
//! single-photon subtraction in a given mode basis, the same way a density
//! matrix characterizes a state.
//!
//! - [`modes`] — frequency grids, Hermite-Gaussian and wavelength-band
//!   spectral modes, overlaps, and basis changes.
//! - [`chi`] — the χ-matrix algebra: construction from operator mixtures,
//!   purity / effective mode count / selectivity / fidelity, the
//!   success-probability forward model, and physicality projection.
//! - [`sfg`] — the sum-frequency-generation subtractor: two-frequency
//!   transfer functions, Schmidt decomposition, and the induced χ.
//! - [`tomography`] — coherent-state process tomography: probe design,
//!   Poisson count simulation, linear inversion, and maximum-likelihood
//!   reconstruction.
//! - [`calibration`] — the realistic-subtractor rate model in |β|² and
//!   constrained extraction of the weights (w₀, w₁, w₂).
//! - [`fock`] — truncated single-mode Fock-space engine: squeezed vacuum,
//!   loss channels, photon subtraction, heralded states, and Wigner
//!   evaluation.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the CLI live
//! in the companion `modesub-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod calibration;
pub mod chi;
pub mod fock;
pub mod modes;
pub mod sfg;
pub mod tomography;

pub(crate) mod linalg;
pub(crate) mod optim;
pub(crate) mod rng;

pub use chi::{AnnihilationOp, OperatorMixture, SubtractionMatrix};
pub use fock::{FockDensity, LossChain, SqueezeParams};
pub use modes::{BasisKind, FrequencyGrid, ModeBasis, SpectralMode};
pub use sfg::{SchmidtDecomposition, SfgConfig, TransferFunction};
pub use tomography::{CountRecord, ProbeSpec, TomographySettings};
