//! P1 finite elements on `(0, 1)` and ground-state eigensolvers.

pub mod assembly;
pub mod eigen;
pub mod mesh;
pub mod problem;
pub mod semilinear;
pub mod sparse;

use num_complex::Complex64;
use thiserror::Error;

pub use assembly::assemble;
pub use eigen::{ground_pair_linear, second_eigenvalue, GroundPair, SolverOptions};
pub use mesh::{Mesh1D, MeshError};
pub use problem::{Problem, ProblemKind};
pub use semilinear::{ground_pair_semilinear, ScfOptions};
pub use sparse::SparseSym;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("non-finite {field} coefficient in cell {cell}")]
    Assembly { field: &'static str, cell: usize },
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("continuation step too large: pivot {pivot:.3e} against scale {scale:.3e}")]
    StepTooLarge { pivot: f64, scale: f64 },
    #[error("continuation left the seeded branch (overlap {overlap:.3e})")]
    BranchSlip { overlap: f64 },
    #[error("coefficient {field} loses ellipticity at x = {x:.4}: Re = {value:.4e}")]
    Degenerate { field: &'static str, x: f64, value: f64 },
    #[error("cannot normalise eigenvector (uᵀMu = {0:.3e})")]
    Normalization(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Discrete `H¹₀` seminorm `sqrt(uᴴ K₀ u)`.
pub fn hnorm(u: &[Complex64], mesh: &Mesh1D) -> f64 {
    assembly::unit_stiffness(mesh).hermitian_form(u).re.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hnorm_examples() {
        let mesh = Mesh1D::uniform(2).unwrap();
        // hat at the midpoint, h = 1/2: sqrt(2/h)
        assert!((hnorm(&[Complex64::new(1.0, 0.0)], &mesh) - 2.0).abs() < 1e-15);
        assert_eq!(hnorm(&[Complex64::default()], &mesh), 0.0);

        let fine = Mesh1D::uniform(512).unwrap();
        let u: Vec<Complex64> =
            fine.interior_nodes().iter().map(|x| Complex64::new(2f64.sqrt() * (PI * x).sin(), 0.0)).collect();
        // quadrature oracle: ‖(√2 sin πx)'‖² = 2π² ∫cos² = π²
        let oracle: f64 = (0..200_000)
            .map(|k| {
                let x = (k as f64 + 0.5) / 200_000.0;
                let d = 2f64.sqrt() * PI * (PI * x).cos();
                d * d / 200_000.0
            })
            .sum::<f64>()
            .sqrt();
        assert!((oracle - PI).abs() < 1e-9);
        assert!((hnorm(&u, &fine) - oracle).abs() < 1e-5);
    }
}
