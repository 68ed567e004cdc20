//! Numerical toolkit for delay fractional differential equations
//!
//! ```text
//! D^{alpha,beta;psi}_{t0+} y(t) = F(t, y(t), y(t - a)),  t in [t0, T]
//! y(t) = Phi(t),                                        t in [t0 - a, t0]
//! ```
//!
//! posed with the psi-Hilfer derivative, together with empirical checks of
//! Ulam-Hyers and Ulam-Hyers-Rassias stability bounds.
//!
//! - [`grid`]: delay-aligned grids, sampled paths, weights and grid metrics
//! - [`quadrature`]: product-trapezoidal psi-Riemann-Liouville integral
//! - [`hilfer`]: the psi-Hilfer derivative as a composition of integrals
//! - [`solver`]: the Picard operator and its fixed-point iteration
//! - [`stability`]: contraction constants, bound functions and certificates
//!
//! The kernel of the psi-Riemann-Liouville integral is read as
//! `psi'(s) (psi(t) - psi(s))^{alpha-1}`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gamma;
pub mod grid;
pub mod hilfer;
pub mod order;
pub mod psi;
pub mod quadrature;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use gamma::gamma;
pub use grid::{uniform_distance, weighted_distance, Path, TimeGrid, WeightFn};
pub use hilfer::{
    psi_hilfer_derivative, psi_hilfer_derivative_weighted, roundtrip_residual, WeightedPath,
};
pub use order::FracOrder;
pub use psi::PsiMap;
pub use quadrature::{power_rule_oracle, rl_integral, RlOperator};
pub use solver::{
    apply_omega, make_quasi_solution, residual, solve_fixed_point, DelayProblem, InitialTermMode,
    SolveOptions, SolveReport,
};
pub use stability::{
    certify_uh, certify_uhr, classical_bound, estimate_k, hadamard_bound, verify_bound,
    CertificateKind, CertifyOptions, StabilityCertificate, UhMode,
};
