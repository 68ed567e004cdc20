use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid mismatch")]
    GridMismatch,
    #[error("alpha must lie in (0,1], got {0}")]
    InvalidAlpha(f64),
    #[error("beta must lie in [0,1], got {0}")]
    InvalidBeta(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{0}")]
    Domain(String),
    #[error("non-finite value at node {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },
    #[error("weight function must be positive, got {value} at t = {t}")]
    NonPositiveWeight { t: f64, value: f64 },
    #[error("grid too short for the difference stencil: {0} nodes")]
    StencilTooShort(usize),
    #[error("candidate does not match the history on [t0-a, t0] at t = {t}")]
    HistoryMismatch { t: f64 },
    #[error("divergent iteration at step {iteration}")]
    Divergent { iteration: usize },
    #[error(
        "inner solve did not converge after {iterations} iterations (last step {last_step:e})"
    )]
    NotConverged { iterations: usize, last_step: f64 },
    #[error("contraction violated: {0}")]
    ContractionViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;
