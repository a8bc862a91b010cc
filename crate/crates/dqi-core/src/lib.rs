//! Spectral lower-bound certification for Decoded Quantum Interferometry (DQI)
//! under imperfect decoding.
//!
//! DQI performance on MAX-LINSAT is governed by the top eigenpair of a
//! structured tridiagonal matrix. When the classical decoder fails on high
//! Hamming-weight layers with per-layer rates ε_k, the certifiable
//! approximation ratio degrades. This crate builds the DQI matrix, extracts
//! its largest eigenvalue and strictly positive leading eigenvector, folds
//! decoding failure profiles into eigenvector-weighted rates, and evaluates
//! the resulting family of lower bounds:
//!
//! - the weighted-rate (master) bound `f ≥ (λ(1−2ε̄) + 2dη̄)/(1−ε̄)`,
//! - Jordan's worst-layer bound `f ≥ λ − 2ε(q−1)(m+1)` (relaxed and tight),
//! - the perfect-decoding semicircle law,
//! - the exact error quadratic form and its cancellation identity.
//!
//! The [`experiments`] module provides deterministic grid-scan drivers
//! (blind-spot scans, phase diagrams, offset sweeps) that emit plot-ready
//! CSV tables and JSON summaries.

pub mod bounds;
pub mod exec;
pub mod experiments;
pub mod profile;
pub mod spectral;

mod fmt;

pub use bounds::{BoundReport, Regime};
pub use fmt::sig6;
pub use profile::{BpModelParams, FailureProfile, ShotRecord, WeightedRates};
pub use spectral::{DqiParams, SpectralPair, TridiagonalMatrix};

use thiserror::Error;

/// Errors surfaced by the certification pipeline.
#[derive(Debug, Error)]
pub enum DqiError {
    /// Inputs outside the admissible parameter domain (ℓ > m, q < 2,
    /// mis-ordered model thresholds, empty grids, ...).
    #[error("parameter domain: {0}")]
    ParamDomain(String),

    /// Weighted failure rate ε̄ ≥ 1: every bound denominator vanishes.
    #[error("degenerate failure profile: weighted rate {eps_bar} >= 1")]
    DegenerateProfile { eps_bar: f64 },

    /// The eigensolver produced a vector violating positivity or the
    /// residual tolerance. This signals a solver bug, never a legitimate
    /// outcome for a valid DQI matrix.
    #[error("spectral failure: {0}")]
    SpectralFailure(String),

    /// Malformed shot-log line, with its 1-based line number.
    #[error("shot log parse error at line {line}: {text:?}")]
    ShotLogParse { line: usize, text: String },

    /// Eigenvector length and profile/matrix extent disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, DqiError>;
