// Copyright 2026 vibron-lab contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Library error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("equilibrium solver did not converge after {iterations} iterations (force residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("step size underflow at t = {t:.6e} s")]
    StepUnderflow { t: f64 },
    #[error("integration exceeded {max_steps} steps at t = {t:.6e} s")]
    TooManySteps { max_steps: usize, t: f64 },
    #[error("generator is not Hurwitz: max real part {max_re:.3e} rad/s")]
    NotHurwitz { max_re: f64 },
    #[error("no dissipation path reaches sites {sites:?}; steady state is not unique")]
    UnreachedSites { sites: Vec<usize> },
    #[error("steady-state residual {residual:.3e} above tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("Hilbert dimension {dim} exceeds the guard of {limit}")]
    DimensionGuard { dim: usize, limit: usize },
    #[error("degenerate steady state (nullity at least {nullity})")]
    DegenerateSteadyState { nullity: usize },
    #[error("correlator did not decay by t = {t:.6e} s (relative magnitude {magnitude:.3e})")]
    NonDecaying { t: f64, magnitude: f64 },
    #[error("iterative solver did not converge: {0}")]
    SolverFailed(String),
    #[error("fit did not converge: {0}")]
    FitFailed(String),
    #[error("mean current is zero; Fano factor undefined")]
    ZeroCurrent,
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("schema error at `{path}`: {msg}")]
    Schema { path: String, msg: String },
    #[error("non-finite value in column `{column}` row {row}")]
    NonFinite { column: String, row: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
