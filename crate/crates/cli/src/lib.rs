//! Batch front-end for `hilfer-core`: scenario documents in, JSON
//! certificates and CSV tables out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod expr;
pub mod report;
pub mod scenario;

use thiserror::Error;

pub use report::{
    run_certify, run_convergence_study, run_solve, CertifyKind, Overrides, RunOutput,
};
pub use scenario::{parse_scenario, parse_scenarios, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Numerical(#[from] hilfer_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        use hilfer_core::Error as E;
        match self {
            CliError::Input(_) | CliError::Io { .. } => 2,
            CliError::Numerical(
                E::Divergent { .. }
                | E::NotConverged { .. }
                | E::NonFinite { .. }
                | E::ContractionViolated(_),
            ) => 3,
            CliError::Numerical(_) => 2,
        }
    }
}

/// The built-in scenario catalog as `(file name, document)` pairs.
pub const CATALOG: &[(&str, &str)] = &[
    (
        "classical.toml",
        include_str!("../scenarios/classical.toml"),
    ),
    (
        "caputo-sine.toml",
        include_str!("../scenarios/caputo-sine.toml"),
    ),
    (
        "hadamard-rl.toml",
        include_str!("../scenarios/hadamard-rl.toml"),
    ),
    (
        "power-hilfer.toml",
        include_str!("../scenarios/power-hilfer.toml"),
    ),
    (
        "log-first-order.toml",
        include_str!("../scenarios/log-first-order.toml"),
    ),
    (
        "identity-mixed.toml",
        include_str!("../scenarios/identity-mixed.toml"),
    ),
    (
        "exp-scale.toml",
        include_str!("../scenarios/exp-scale.toml"),
    ),
];

/// Every scenario of the built-in catalog.
pub fn catalog() -> Vec<Scenario> {
    CATALOG
        .iter()
        .flat_map(|(file, text)| {
            parse_scenarios(text).unwrap_or_else(|e| panic!("catalog entry {file}: {e}"))
        })
        .collect()
}
