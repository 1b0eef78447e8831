//! Pulse-level simulator for hybrid spin-photon qubits.
//!
//! The physical system is a set of tunable superconducting resonator modes
//! coupled to spin ensembles and (optionally) a Cooper-pair box. Each logical
//! qubit lives in the single-excitation subspace of one mode/ensemble pair:
//! `|0⟩` is a collective spin excitation, `|1⟩` is one photon in the mode.
//! All gates are driven purely by timed shifts of the resonator frequencies
//! (detuning pulses); this crate compiles those pulse schedules, integrates
//! the time-dependent dynamics, and scores the resulting gates.

pub mod calibrate;
pub mod config;
pub mod device;
pub mod dynamics;
pub mod expm;
pub mod hilbert;
pub mod metrics;
pub mod pulses;
pub mod scenarios;
pub mod sparse;
pub mod units;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("device validation failed:\n{0}")]
    Validation(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("basis dimension {dim} exceeds limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },
    #[error("{0} did not converge: {1}")]
    NonConvergence(&'static str, String),
    #[error("integrator tolerance failure: worst local error {worst:.3e} > {tol:.3e}")]
    Tolerance { worst: f64, tol: f64 },
    #[error("gate compilation failed: {0}")]
    Compile(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
