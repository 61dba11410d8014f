//! Randomly shifted rank-1 lattice rules for parametric expectations.

pub mod estimate;
pub mod lattice;

use thiserror::Error;

use crate::pde::SolverError;

pub use estimate::{
    convergence_study, convergence_study_fn, convergence_study_with, estimate, estimate_fn, fit_slope, monte_carlo,
    product_integrand, truncation_study, ConvergenceRow, ConvergenceStudy, Functional, QmcEstimate, SolveMode,
    TruncationRow, TruncationStudy,
};
pub use lattice::{cbc_construct, cbc_with_errors, is_prime, worst_case_error_sq, LatticeRule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmcError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solve failed at y = {point:?}: {source}")]
    Solve { point: Vec<f64>, source: SolverError },
}
