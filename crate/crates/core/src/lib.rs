//! Simulation and reconstruction toolkit for antedated quantum tomography.
//!
//! The protocol teleports a late-prepared qubit backwards through a
//! pre-shared entangled pair: Pauli measurements are recorded on one half of
//! the pair early, a delayed Bell measurement between the other half and the
//! freshly prepared qubit picks a branch, and the classical records are then
//! unscrambled by the Bell outcome to yield tomographic data for the state
//! that did not exist when it was measured.
//!
//! The crate is organised around that pipeline:
//!
//! * [`qcore`] — exact complex linear algebra for one- and two-qubit objects
//!   (states, Pauli operators, Bell states, branch corrections, fidelities).
//! * [`simproto`] — exact-probability and Monte Carlo simulation of the
//!   source, the early Pauli station, and a partial Bell analyzer with
//!   finite interference visibility.
//! * [`antedate`] — the classical post-processing core: sign-correction rule,
//!   measurement-direction transform, and count unscrambling.
//! * [`statetomo`] — maximum-likelihood single-qubit reconstruction with
//!   Poissonian bootstrap error bars.
//! * [`proctomo`] — maximum-likelihood process tomography of the time
//!   channel, with conversions between its operator representations.
//! * [`fixtures`] — reference matrices from the experiment this models,
//!   used as oracles by tests and exported by the CLI.
//! * [`seeds`] — the single-seed derivation scheme that makes every
//!   stochastic stage reproducible.

pub mod antedate;
pub mod fixtures;
pub mod proctomo;
pub mod qcore;
pub mod seeds;
pub mod simproto;
pub mod statetomo;

use thiserror::Error;

/// Error type shared by all modules of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {what}")]
    IndexOutOfRange { what: &'static str, index: usize },

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("missing or empty counts for basis {basis}")]
    MissingBasis { basis: usize },

    #[error("the identity is not a tomographic basis")]
    NotTomographic,

    #[error("unresolved rows cannot enter reconstruction")]
    UnresolvedRows,

    #[error("no counts found for state {0:?}")]
    UnknownState(String),

    #[error("input states span only {rank} operator directions; at least 4 are required")]
    InputsNotInformationallyComplete { rank: usize },

    #[error("log-likelihood decreased by {delta:.3e} at iteration {iteration}")]
    NonMonotoneLikelihood { iteration: usize, delta: f64 },

    #[error("ideal process matrix must be a rank-1 unit-trace projector")]
    IdealNotRankOne,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("malformed matrix data: {0}")]
    MalformedMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
