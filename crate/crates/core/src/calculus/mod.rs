//! Parametric derivatives of the ground pair: central differences,
//! Chebyshev interpolation on the real segment, and Cauchy contour
//! quadrature with eigenpair continuation.
//!
//! Coordinates are 0-based throughout the library.

mod chebyshev;
mod contour;
mod fd;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pde::{GroundPair, Problem, SolverError, SolverOptions};

pub use chebyshev::{cheb_coefficients, cheb_derivative_coefficients, cheb_eval, deriv_chebyshev, CHEB_DEGREE};
pub use contour::{
    circle_pairs, default_quadrature, deriv_contour, deriv_mixed, radius_estimate, ContourResult, ContourSpec,
    RadiusSearch, CLOSURE_TOL, THETA_SAFETY,
};
pub use fd::{deriv_fd, fd_weights};

/// Highest derivative order handled by any method.
pub const MAX_ORDER: u32 = 6;

#[derive(Debug, Error)]
pub enum CalculusError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solve failed at y[{coord}] = {point}: {source}")]
    Solve {
        coord: usize,
        point: Complex64,
        #[source]
        source: SolverError,
    },
    #[error(
        "contour on y[{coord}] with radius {radius:.4e} did not close (mismatch {mismatch:.3e}); shrink the radius"
    )]
    LoopClosure { coord: usize, radius: f64, mismatch: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fd,
    Chebyshev,
    Contour,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fd => "fd",
            Method::Chebyshev => "cheb",
            Method::Contour => "contour",
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fd" => Ok(Method::Fd),
            "cheb" | "chebyshev" => Ok(Method::Chebyshev),
            "contour" => Ok(Method::Contour),
            other => Err(format!("unknown method `{other}` (fd, cheb, contour)")),
        }
    }
}

/// Sparse multi-index: `(coordinate, order)` pairs, sorted, no zero orders.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct MultiIndex(Vec<(usize, u32)>);

impl MultiIndex {
    pub fn new(mut entries: Vec<(usize, u32)>) -> Self {
        entries.retain(|(_, n)| *n > 0);
        entries.sort_unstable();
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Self(entries)
    }

    pub fn single(j: usize, n: u32) -> Self {
        Self::new(vec![(j, n)])
    }

    pub fn from_dense(orders: &[u32]) -> Self {
        Self::new(orders.iter().copied().enumerate().collect())
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.0
    }

    /// `|ν|`.
    pub fn order(&self) -> u32 {
        self.0.iter().map(|(_, n)| n).sum()
    }

    pub fn support(&self) -> usize {
        self.0.len()
    }

    /// `ν! = Π ν_j!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|(_, n)| factorial_f64(*n)).product()
    }

    pub fn dense(&self) -> Vec<u32> {
        let len = self.0.last().map_or(0, |(j, _)| j + 1);
        let mut out = vec![0; len];
        for (j, n) in &self.0 {
            out[*j] = *n;
        }
        out
    }

    /// `ν + μ`.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex::new(self.0.iter().chain(&other.0).copied().collect())
    }
}

impl fmt::Display for MultiIndex {
    /// Dense orders joined by `;`, `0` for the empty index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dense = self.dense();
        if dense.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = dense.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for MultiIndex {
    type Err = String;

    /// Dense orders separated by `,` or `;`, e.g. `2,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let orders = s
            .split([',', ';'])
            .map(|t| t.trim().parse::<u32>().map_err(|e| format!("bad multi-index `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_dense(&orders))
    }
}

pub(crate) fn factorial_f64(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeEntry {
    pub nu: MultiIndex,
    pub d_lambda: Complex64,
    /// `‖∂^ν u‖_{H¹₀}`.
    pub hnorm_du: f64,
    pub method: Method,
    /// Estimated absolute error of `d_lambda`.
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeTable {
    pub base: Vec<f64>,
    pub entries: Vec<DerivativeEntry>,
}

impl DerivativeTable {
    pub fn new(base: Vec<f64>) -> Self {
        Self { base, entries: Vec::new() }
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = DerivativeEntry>) {
        self.entries.extend(entries);
    }

    pub fn get(&self, nu: &MultiIndex, method: Method) -> Option<&DerivativeEntry> {
        self.entries.iter().find(|e| &e.nu == nu && e.method == method)
    }
}

/// Derivative work needs eigenvectors well below the default tolerance.
pub(crate) fn tightened(problem: &Problem) -> Problem {
    let tol = problem.solver.tol.min(1e-11);
    problem.clone().with_solver(SolverOptions { tol, ..problem.solver })
}

pub(crate) fn solve_at(
    problem: &Problem,
    y: &[Complex64],
    coord: usize,
    seed: Option<&GroundPair>,
) -> Result<GroundPair, CalculusError> {
    problem.solve(y, seed).map_err(|source| CalculusError::Solve { coord, point: y[coord], source })
}

pub(crate) fn to_complex(y: &[f64]) -> Vec<Complex64> {
    y.iter().map(|v| Complex64::new(*v, 0.0)).collect()
}

/// Checks `j < s`, `n <= MAX_ORDER` and pads `y` with zeros up to `j + 1`.
pub(crate) fn check_coordinate(problem: &Problem, y: &[f64], j: usize, n: u32) -> Result<Vec<f64>, CalculusError> {
    let s = problem.dimension();
    if j >= s {
        return Err(CalculusError::Domain(format!("coordinate {j} outside 0..{s}")));
    }
    if n > MAX_ORDER {
        return Err(CalculusError::Domain(format!("order {n} above {MAX_ORDER}")));
    }
    if y.len() > s {
        return Err(CalculusError::Domain(format!("{} parameters given, s = {s}", y.len())));
    }
    let mut y = y.to_vec();
    if y.len() <= j {
        y.resize(j + 1, 0.0);
    }
    Ok(y)
}
