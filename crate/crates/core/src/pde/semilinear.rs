//! Ground state of `-(A u')' + B u + η u^p = λ u`, `‖u‖_{L²} = 1`, by damped
//! self-consistent iteration on the linearised potential `B + η u^{p-1}`.
//!
//! The nonlinear term uses the same cell-midpoint quadrature as the
//! coefficients: on each cell `u^{p-1}` is frozen at its midpoint value.
//! The discrete `∫ u^{p+1}` is defined with that quadrature, so the energy
//! identity `λ = a(u,u) + ∫B u² + η ∫u^{p+1}` holds exactly at a fixed point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assembly::{assemble, mass, midpoint_values, stiffness, unit_mass};
use super::eigen::{align_to, ground_pair_linear, normalize_bilinear, GroundPair, SolverOptions};
use super::mesh::Mesh1D;
use super::sparse::{norm2, SparseSym};
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfOptions {
    /// Mixing weight of the new iterate.
    pub theta: f64,
    pub max_iters: usize,
}

impl Default for ScfOptions {
    fn default() -> Self {
        Self { theta: 0.5, max_iters: 500 }
    }
}

pub const ALLOWED_POWERS: [u32; 3] = [1, 3, 5];

/// `u_mid^{p-1}` per cell.
fn nonlinear_weight(u: &[Complex64], p: u32) -> Vec<Complex64> {
    midpoint_values(u).into_iter().map(|v| v.powu(p - 1)).collect()
}

/// Discrete `∫ u^{p+1}` under the midpoint-frozen quadrature.
pub fn nonlinear_integral(mesh: &Mesh1D, u: &[Complex64], p: u32) -> Complex64 {
    mass(mesh, &nonlinear_weight(u, p)).bilinear(u, u)
}

/// Terms of the energy identity at `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `∫ A |u'|²` (bilinear).
    pub stiffness: Complex64,
    pub potential: Complex64,
    pub nonlinear: Complex64,
}

impl EnergyTerms {
    pub fn total(&self, eta: f64) -> Complex64 {
        self.stiffness + self.potential + eta * self.nonlinear
    }
}

pub fn energy_terms(mesh: &Mesh1D, a_vals: &[Complex64], b_vals: &[Complex64], u: &[Complex64], p: u32) -> EnergyTerms {
    EnergyTerms {
        stiffness: stiffness(mesh, a_vals).bilinear(u, u),
        potential: mass(mesh, b_vals).bilinear(u, u),
        nonlinear: nonlinear_integral(mesh, u, p),
    }
}

fn hamiltonian(mesh: &Mesh1D, k_lin: &SparseSym, b_vals: &[Complex64], eta: f64, p: u32, u: &[Complex64]) -> SparseSym {
    let w = nonlinear_weight(u, p);
    let v: Vec<Complex64> = b_vals.iter().zip(&w).map(|(b, w)| b + eta * w).collect();
    k_lin.axpy(Complex64::new(1.0, 0.0), &mass(mesh, &v))
}

/// Solves the semilinear ground-state problem. `seed` continues a nearby
/// solution; without one the `η = 0` linear ground state starts the iteration.
#[allow(clippy::too_many_arguments)]
pub fn ground_pair_semilinear(
    mesh: &Mesh1D,
    a_vals: &[Complex64],
    b_vals: &[Complex64],
    eta: f64,
    p: u32,
    seed: Option<&GroundPair>,
    opts: &SolverOptions,
    scf: &ScfOptions,
) -> Result<GroundPair, SolverError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(SolverError::Domain(format!("eta = {eta} must be non-negative")));
    }
    if !ALLOWED_POWERS.contains(&p) {
        return Err(SolverError::Domain(format!("p = {p} not in {ALLOWED_POWERS:?}")));
    }
    if !(scf.theta > 0.0 && scf.theta <= 1.0) {
        return Err(SolverError::Domain(format!("mixing theta = {} outside (0, 1]", scf.theta)));
    }
    let ones = vec![Complex64::new(1.0, 0.0); mesh.n_cells()];
    let (k_lin, m) = assemble(mesh, a_vals, &vec![Complex64::default(); mesh.n_cells()], &ones)?;
    let m1 = unit_mass(mesh);
    debug_assert_eq!(m, m1);
    let k_ab = k_lin.axpy(Complex64::new(1.0, 0.0), &mass(mesh, b_vals));
    if eta == 0.0 || p == 1 {
        // p = 1 adds the constant η to the potential
        let k = if p == 1 { k_ab.axpy(Complex64::new(eta, 0.0), &m1) } else { k_ab };
        return ground_pair_linear(&k, &m1, seed, opts);
    }

    let inner = SolverOptions { tol: (0.1 * opts.tol).max(1e-12), ..*opts };
    let mut current = match seed {
        Some(s) => s.clone(),
        None => ground_pair_linear(&k_ab, &m1, None, &inner)?,
    };
    let mut u = current.u.clone();
    let mut last = f64::INFINITY;
    for it in 0..scf.max_iters {
        let h = hamiltonian(mesh, &k_lin, b_vals, eta, p, &u);
        let hu = h.matvec(&u);
        let mu = m1.matvec(&u);
        let lambda = super::sparse::dot(&u, &hu);
        let r: Vec<Complex64> = hu.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
        let residual = norm2(&r) / norm2(&hu).max(f64::MIN_POSITIVE);
        last = residual;
        if residual <= opts.tol {
            if let Some(s) = seed {
                align_to(&mut u, &s.u, &m1);
            }
            let norm_check = (m1.hermitian_form(&u) - 1.0).norm();
            return Ok(GroundPair { lambda, u, residual, norm_check, iterations: it });
        }
        current.u = u.clone();
        current.lambda = lambda;
        let fresh = ground_pair_linear(&h, &m1, Some(&current), &inner)?;
        let mut mixed: Vec<Complex64> =
            u.iter().zip(&fresh.u).map(|(a, b)| (1.0 - scf.theta) * a + scf.theta * b).collect();
        normalize_bilinear(&mut mixed, &m1)?;
        align_to(&mut mixed, &u, &m1);
        u = mixed;
    }
    Err(SolverError::NoConvergence { iterations: scf.max_iters, residual: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::hnorm;
    use std::f64::consts::PI;

    fn consts(v: f64, n: usize) -> Vec<Complex64> {
        vec![Complex64::new(v, 0.0); n]
    }

    #[test]
    fn zero_eta_is_linear_solution() {
        let mesh = Mesh1D::uniform(64).unwrap();
        let opts = SolverOptions::default();
        let pair = ground_pair_semilinear(
            &mesh,
            &consts(1.0, 64),
            &consts(0.0, 64),
            0.0,
            3,
            None,
            &opts,
            &ScfOptions::default(),
        )
        .unwrap();
        let (k, m) = assemble(&mesh, &consts(1.0, 64), &consts(0.0, 64), &consts(1.0, 64)).unwrap();
        let lin = ground_pair_linear(&k, &m, None, &opts).unwrap();
        assert_eq!(pair, lin);
    }

    #[test]
    fn small_eta_perturbation_slope() {
        // λ(η) ≈ λ(0) + η ∫u₀⁴ with ∫(√2 sin πx)⁴ = 3/2
        let mesh = Mesh1D::uniform(128).unwrap();
        let opts = SolverOptions::default();
        let run = |eta| {
            ground_pair_semilinear(
                &mesh,
                &consts(1.0, 128),
                &consts(0.0, 128),
                eta,
                3,
                None,
                &opts,
                &ScfOptions::default(),
            )
            .unwrap()
        };
        let base = run(0.0).lambda.re;
        let eta = 1e-3;
        let slope = (run(eta).lambda.re - base) / eta;
        assert!((slope - 1.5).abs() < 2e-3, "slope {slope}");
        assert!((run(1e-8).lambda.re - base).abs() < 1e-7);
        assert!((base - PI * PI).abs() < 1e-3);
    }

    #[test]
    fn energy_identity_at_convergence() {
        let mesh = Mesh1D::uniform(96).unwrap();
        let opts = SolverOptions::default();
        let a = consts(1.0, 96);
        let b: Vec<Complex64> = mesh.midpoints().iter().map(|x| Complex64::new(2.0 * x, 0.0)).collect();
        for (eta, p) in [(1.0, 3), (5.0, 3), (0.5, 5)] {
            let pair = ground_pair_semilinear(&mesh, &a, &b, eta, p, None, &opts, &ScfOptions::default()).unwrap();
            let terms = energy_terms(&mesh, &a, &b, &pair.u, p);
            assert!((pair.lambda - terms.total(eta)).norm() <= 10.0 * opts.tol * pair.lambda.norm());
            assert!(pair.norm_check < 1e-10);
            assert!(pair.lambda.re > PI * PI);
            let grad = hnorm(&pair.u, &mesh);
            assert!((grad * grad - terms.stiffness.re).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_inputs() {
        let mesh = Mesh1D::uniform(8).unwrap();
        let opts = SolverOptions::default();
        let scf = ScfOptions::default();
        let a = consts(1.0, 8);
        let b = consts(0.0, 8);
        assert!(ground_pair_semilinear(&mesh, &a, &b, -1.0, 3, None, &opts, &scf).is_err());
        assert!(ground_pair_semilinear(&mesh, &a, &b, 1.0, 2, None, &opts, &scf).is_err());
    }
}
