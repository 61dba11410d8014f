//! Ground eigenpair of `K u = λ M u` by shifted inverse iteration.
//!
//! Eigenvectors are normalised with the bilinear form `uᵀ M u = 1`, which
//! is the holomorphic continuation of the `L²` normalisation: for real
//! problems it coincides with `uᴴ M u = 1`, and for complex parameters it
//! keeps `u(z)` analytic in `z`. The sign is fixed by a positive mass-weighted
//! mean (cold start) or by alignment with the seed (continuation).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sparse::{dot, norm2, SparseSym, TridiagonalLu};
use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative residual `‖Ku - λMu‖ / ‖Ku‖` accepted as converged.
    pub tol: f64,
    pub max_iters: usize,
    /// Residual below which a cold start switches to Rayleigh-quotient shifts.
    pub rqi_switch: f64,
    /// Pivots below `pivot_tol * scale` abort the step.
    pub pivot_tol: f64,
    /// Minimum `|seedᵀ M u|` accepted for a continuation step.
    pub min_overlap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iters: 200, rqi_switch: 1e-3, pivot_tol: 1e-14, min_overlap: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundPair {
    pub lambda: Complex64,
    /// Interior-node coefficients.
    pub u: Vec<Complex64>,
    pub residual: f64,
    /// `|uᴴ M u - 1|`.
    pub norm_check: f64,
    pub iterations: usize,
}

impl GroundPair {
    pub fn is_real(&self) -> bool {
        self.lambda.im == 0.0 && self.u.iter().all(|v| v.im == 0.0)
    }

    pub fn u_real(&self) -> Vec<f64> {
        self.u.iter().map(|v| v.re).collect()
    }
}

/// Scales `u` to `uᵀ M u = 1`.
pub(crate) fn normalize_bilinear(u: &mut [Complex64], m: &SparseSym) -> Result<(), SolverError> {
    let s = m.bilinear(u, u);
    if !(s.norm() > 1e-300) || !s.re.is_finite() {
        return Err(SolverError::Normalization(s.norm()));
    }
    let inv = s.sqrt().inv();
    u.iter_mut().for_each(|v| *v *= inv);
    Ok(())
}

/// Flips the sign of `u` so that `Re(refᵀ M u) >= 0`.
pub(crate) fn align_to(u: &mut [Complex64], reference: &[Complex64], m: &SparseSym) -> Complex64 {
    let overlap = m.bilinear(reference, u);
    if overlap.re < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
        -overlap
    } else {
        overlap
    }
}

/// Flips `u` to a positive mass-weighted mean.
pub(crate) fn fix_sign(u: &mut [Complex64], m: &SparseSym) {
    let mean: Complex64 = m.matvec(u).iter().sum();
    if mean.re < 0.0 {
        u.iter_mut().for_each(|v| *v = -*v);
    }
}

pub fn rayleigh_quotient(k: &SparseSym, m: &SparseSym, u: &[Complex64]) -> Complex64 {
    k.bilinear(u, u) / m.bilinear(u, u)
}

pub fn relative_residual(k: &SparseSym, m: &SparseSym, u: &[Complex64], lambda: Complex64) -> f64 {
    let ku = k.matvec(u);
    let mu = m.matvec(u);
    let r: Vec<Complex64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
    norm2(&r) / norm2(&ku).max(f64::MIN_POSITIVE)
}

fn initial_vector(n: usize) -> Vec<Complex64> {
    (0..n).map(|i| Complex64::new((std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin(), 0.0)).collect()
}

struct Bands {
    kl: Vec<Complex64>,
    kd: Vec<Complex64>,
    ku: Vec<Complex64>,
    ml: Vec<Complex64>,
    md: Vec<Complex64>,
    mu: Vec<Complex64>,
}

impl Bands {
    fn new(k: &SparseSym, m: &SparseSym) -> Self {
        let (kl, kd, ku) = k.bands();
        let (ml, md, mu) = m.bands();
        Self { kl, kd, ku, ml, md, mu }
    }

    fn shifted(&self, sigma: Complex64, pivot_tol: f64) -> Result<TridiagonalLu, super::sparse::SingularPivot> {
        let sub = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> {
            a.iter().zip(b).map(|(x, y)| x - sigma * y).collect()
        };
        TridiagonalLu::factor(&sub(&self.kl, &self.ml), &sub(&self.kd, &self.md), &sub(&self.ku, &self.mu), pivot_tol)
    }
}

/// Smallest eigenpair of `K u = λ M u` (or the branch continued from `seed`).
///
/// A cold start uses shift 0 until the residual drops below
/// `opts.rqi_switch`, then Rayleigh-quotient shifts. A seeded start uses
/// Rayleigh-quotient shifts from the seed vector and rejects results that
/// lost overlap with the seed.
pub fn ground_pair_linear(
    k: &SparseSym,
    m: &SparseSym,
    seed: Option<&GroundPair>,
    opts: &SolverOptions,
) -> Result<GroundPair, SolverError> {
    let n = k.dim;
    if n == 0 || m.dim != n {
        return Err(SolverError::Domain(format!("matrix dimensions {n} and {}", m.dim)));
    }
    let bands = Bands::new(k, m);
    let mut u = match seed {
        Some(s) if s.u.len() == n => s.u.clone(),
        Some(s) => return Err(SolverError::Domain(format!("seed has {} entries, expected {n}", s.u.len()))),
        None => initial_vector(n),
    };
    normalize_bilinear(&mut u, m)?;
    let fixed_shift = seed.map(|s| s.lambda).unwrap_or_default();
    let mut rqi = seed.is_some();
    let mut last_residual = f64::INFINITY;

    for it in 0..opts.max_iters {
        let ku = k.matvec(&u);
        let mu = m.matvec(&u);
        let lambda = dot(&u, &ku) / dot(&u, &mu);
        let r: Vec<Complex64> = ku.iter().zip(&mu).map(|(a, b)| a - lambda * b).collect();
        let residual = norm2(&r) / norm2(&ku).max(f64::MIN_POSITIVE);
        last_residual = residual;
        if residual <= opts.tol {
            return finish(u, lambda, residual, it, m, seed, opts);
        }
        if !rqi && residual < opts.rqi_switch {
            rqi = true;
        }
        let sigma = if rqi { lambda } else { fixed_shift };
        let lu = match bands.shifted(sigma, opts.pivot_tol) {
            Ok(lu) => lu,
            // The Rayleigh shift hit the eigenvalue to working precision.
            Err(_) if rqi => {
                let nudged = sigma * (1.0 + 1e-10) + 1e-12;
                bands
                    .shifted(nudged, opts.pivot_tol)
                    .map_err(|p| SolverError::StepTooLarge { pivot: p.pivot, scale: p.scale })?
            }
            Err(p) => return Err(SolverError::StepTooLarge { pivot: p.pivot, scale: p.scale }),
        };
        let mut w = lu.solve(&mu);
        normalize_bilinear(&mut w, m)?;
        align_to(&mut w, &u, m);
        u = w;
    }
    Err(SolverError::NoConvergence { iterations: opts.max_iters, residual: last_residual })
}

fn finish(
    mut u: Vec<Complex64>,
    lambda: Complex64,
    residual: f64,
    iterations: usize,
    m: &SparseSym,
    seed: Option<&GroundPair>,
    opts: &SolverOptions,
) -> Result<GroundPair, SolverError> {
    match seed {
        Some(s) => {
            let overlap = align_to(&mut u, &s.u, m);
            if overlap.norm() < opts.min_overlap {
                return Err(SolverError::BranchSlip { overlap: overlap.norm() });
            }
        }
        None => fix_sign(&mut u, m),
    }
    let norm_check = (m.hermitian_form(&u) - 1.0).norm();
    Ok(GroundPair { lambda, u, residual, norm_check, iterations })
}

/// Second eigenvalue of a real symmetric pencil by inverse iteration
/// deflated against `ground` in the `M` inner product. Diagnostic only.
pub fn second_eigenvalue(
    k: &SparseSym,
    m: &SparseSym,
    ground: &GroundPair,
    opts: &SolverOptions,
) -> Result<f64, SolverError> {
    let n = k.dim;
    let bands = Bands::new(k, m);
    let lu = bands
        .shifted(Complex64::default(), opts.pivot_tol)
        .map_err(|p| SolverError::StepTooLarge { pivot: p.pivot, scale: p.scale })?;
    let deflate = |w: &mut Vec<Complex64>| {
        let c = m.bilinear(&ground.u, w);
        w.iter_mut().zip(&ground.u).for_each(|(wi, gi)| *wi -= c * gi);
    };
    // odd-about-the-centre start has a large second-mode component
    let mut w: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new((2.0 * std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin(), 0.0))
        .collect();
    deflate(&mut w);
    normalize_bilinear(&mut w, m)?;
    let mut lambda = rayleigh_quotient(k, m, &w);
    for _ in 0..opts.max_iters.max(500) {
        let mut next = lu.solve(&m.matvec(&w));
        deflate(&mut next);
        normalize_bilinear(&mut next, m)?;
        let next_lambda = rayleigh_quotient(k, m, &next);
        let res = relative_residual(k, m, &next, next_lambda);
        w = next;
        lambda = next_lambda;
        if res <= opts.tol.max(1e-9) {
            return Ok(lambda.re);
        }
    }
    Ok(lambda.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::assembly::assemble;
    use crate::pde::mesh::Mesh1D;
    use std::f64::consts::PI;

    fn consts(v: f64, n: usize) -> Vec<Complex64> {
        vec![Complex64::new(v, 0.0); n]
    }

    fn laplacian(n: usize) -> (SparseSym, SparseSym) {
        let mesh = Mesh1D::uniform(n).unwrap();
        assemble(&mesh, &consts(1.0, n), &consts(0.0, n), &consts(1.0, n)).unwrap()
    }

    /// Dense generalized symmetric eigen oracle for tiny systems: Jacobi
    /// rotations on `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`.
    #[allow(clippy::needless_range_loop)]
    fn dense_smallest(k: &SparseSym, m: &SparseSym) -> f64 {
        let n = k.dim;
        let km: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| k.get(i, j).re).collect()).collect();
        let mm: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.get(i, j).re).collect()).collect();
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
                l[i][j] = if i == j { (mm[i][i] - s).sqrt() } else { (mm[i][j] - s) / l[j][j] };
            }
        }
        let solve_l = |b: &[f64]| {
            let mut x = vec![0.0; n];
            for i in 0..n {
                x[i] = (b[i] - (0..i).map(|p| l[i][p] * x[p]).sum::<f64>()) / l[i][i];
            }
            x
        };
        // C = L⁻¹ K L⁻ᵀ, built column by column
        let cols: Vec<Vec<f64>> = (0..n).map(|j| solve_l(&(0..n).map(|i| km[i][j]).collect::<Vec<_>>())).collect();
        let mut c = vec![vec![0.0; n]; n];
        for i in 0..n {
            let row: Vec<f64> = (0..n).map(|j| cols[j][i]).collect();
            let x = solve_l(&row);
            c[i] = x;
        }
        for _ in 0..100 {
            for p in 0..n {
                for q in p + 1..n {
                    if c[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * c[p][q]).atan2(c[q][q] - c[p][p]);
                    let (s, co) = theta.sin_cos();
                    for r in 0..n {
                        let (a, b) = (c[r][p], c[r][q]);
                        c[r][p] = co * a - s * b;
                        c[r][q] = s * a + co * b;
                    }
                    for r in 0..n {
                        let (a, b) = (c[p][r], c[q][r]);
                        c[p][r] = co * a - s * b;
                        c[q][r] = s * a + co * b;
                    }
                }
            }
        }
        (0..n).map(|i| c[i][i]).fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn three_dof_laplacian_matches_dense_oracle() {
        let (k, m) = laplacian(4);
        let pair = ground_pair_linear(&k, &m, None, &SolverOptions::default()).unwrap();
        let oracle = dense_smallest(&k, &m);
        let closed = 96.0 * (1.0 - (PI / 4.0).cos()) / (2.0 + (PI / 4.0).cos());
        assert!((oracle - closed).abs() < 1e-12);
        assert!((pair.lambda.re - closed).abs() < 1e-12);
        assert!((closed - 10.3866).abs() < 1e-4);
        assert_eq!(pair.lambda.im, 0.0);
        assert!(pair.norm_check < 1e-10);
        assert!(pair.u.iter().all(|v| v.re > 0.0));
    }

    #[test]
    fn fine_mesh_approaches_continuum() {
        let n = 400;
        let (k, m) = laplacian(n);
        let pair = ground_pair_linear(&k, &m, None, &SolverOptions::default()).unwrap();
        assert!((pair.lambda.re - PI * PI).abs() < 1e-4);
        let mesh = Mesh1D::uniform(n).unwrap();
        for (u, x) in pair.u.iter().zip(mesh.interior_nodes()) {
            assert!((u.re - 2f64.sqrt() * (PI * x).sin()).abs() < 1e-4);
        }
    }

    #[test]
    fn residual_and_normalisation_invariants() {
        let mesh = Mesh1D::uniform(50).unwrap();
        let a: Vec<Complex64> = mesh.midpoints().iter().map(|x| Complex64::new(1.0 + 0.3 * x, 0.0)).collect();
        let b: Vec<Complex64> = mesh.midpoints().iter().map(|x| Complex64::new(5.0 * x * x, 0.0)).collect();
        let (k, m) = assemble(&mesh, &a, &b, &consts(1.0, 50)).unwrap();
        let opts = SolverOptions::default();
        let pair = ground_pair_linear(&k, &m, None, &opts).unwrap();
        assert!(relative_residual(&k, &m, &pair.u, pair.lambda) <= opts.tol);
        assert!((rayleigh_quotient(&k, &m, &pair.u) - pair.lambda).norm() < 1e-12);
        let gap = second_eigenvalue(&k, &m, &pair, &opts).unwrap();
        assert!(gap > pair.lambda.re + 10.0);
    }

    #[test]
    fn seeded_continuation_matches_cold_start() {
        let mesh = Mesh1D::uniform(40).unwrap();
        let opts = SolverOptions::default();
        let field = |t: f64| -> Vec<Complex64> {
            mesh.midpoints().iter().map(|x| Complex64::new(1.0 + t * (PI * x).sin(), 0.0)).collect()
        };
        let (k0, m0) = assemble(&mesh, &field(0.1), &consts(0.0, 40), &consts(1.0, 40)).unwrap();
        let seed = ground_pair_linear(&k0, &m0, None, &opts).unwrap();
        let (k1, m1) = assemble(&mesh, &field(0.15), &consts(0.0, 40), &consts(1.0, 40)).unwrap();
        let warm = ground_pair_linear(&k1, &m1, Some(&seed), &opts).unwrap();
        let cold = ground_pair_linear(&k1, &m1, None, &opts).unwrap();
        let diff: f64 = warm.u.iter().zip(&cold.u).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-8);
        assert!((warm.lambda - cold.lambda).norm() < 1e-11);
    }

    #[test]
    fn complex_continuation_is_bilinear_normalised() {
        let mesh = Mesh1D::uniform(30).unwrap();
        let opts = SolverOptions::default();
        let (k, m) = laplacian(30);
        let seed = ground_pair_linear(&k, &m, None, &opts).unwrap();
        let a = vec![Complex64::new(1.0, 0.2); 30];
        let (kc, mc) = assemble(&mesh, &a, &consts(0.0, 30), &consts(1.0, 30)).unwrap();
        let pair = ground_pair_linear(&kc, &mc, Some(&seed), &opts).unwrap();
        // constant complex A scales the spectrum
        assert!((pair.lambda - seed.lambda * Complex64::new(1.0, 0.2)).norm() < 1e-10);
        assert!((mc.bilinear(&pair.u, &pair.u) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn non_convergence_reported() {
        // the sine start is exact for the uniform Laplacian; vary A instead
        let mesh = Mesh1D::uniform(20).unwrap();
        let a: Vec<Complex64> = mesh.midpoints().iter().map(|x| Complex64::new(1.0 + 3.0 * x * x, 0.0)).collect();
        let (k, m) = assemble(&mesh, &a, &consts(0.0, 20), &consts(1.0, 20)).unwrap();
        let opts = SolverOptions { max_iters: 1, ..SolverOptions::default() };
        assert!(matches!(ground_pair_linear(&k, &m, None, &opts), Err(SolverError::NoConvergence { .. })));
    }
}
