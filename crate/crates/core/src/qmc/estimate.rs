//! Shifted-lattice estimators and the rate and truncation studies built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lattice::{is_prime, LatticeRule};
use super::QmcError;
use crate::exec::Exec;
use crate::pde::{GroundPair, Problem};

/// Quantity of interest evaluated on the ground pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Lambda,
    /// `gᵀ (M u)` for a dual vector on the interior nodes.
    Gu {
        g: Vec<f64>,
    },
}

impl Functional {
    pub fn apply(&self, problem: &Problem, pair: &GroundPair) -> f64 {
        match self {
            Functional::Lambda => pair.lambda.re,
            Functional::Gu { g } => problem.functional(g, &pair.u).re,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Functional::Lambda => "lambda",
            Functional::Gu { .. } => "g_u",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Cold,
    /// Points of each shift sorted by `y_1` and solved as one seeded chain.
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcEstimate {
    pub n: u64,
    pub s: usize,
    pub per_shift: Vec<f64>,
    pub mean: f64,
    /// Standard deviation of the per-shift means over `sqrt(R)`.
    pub rms: f64,
    pub evaluations: u64,
}

impl QmcEstimate {
    pub fn from_shift_means(n: u64, s: usize, per_shift: Vec<f64>) -> Self {
        let r = per_shift.len() as f64;
        let mean = per_shift.iter().sum::<f64>() / r;
        let var = per_shift.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (r - 1.0).max(1.0);
        let evaluations = n * per_shift.len() as u64;
        Self { n, s, per_shift, mean, rms: (var / r).sqrt(), evaluations }
    }
}

fn mean_in_order(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Estimate of `∫ f` over `[-1/2, 1/2]^s`. Per-shift sums run in lattice
/// order, so the result does not depend on `exec`.
pub fn estimate_fn<F>(f: F, rule: &LatticeRule, exec: Exec) -> Result<QmcEstimate, QmcError>
where
    F: Fn(&[f64]) -> Result<f64, QmcError> + Sync + Send,
{
    let n = rule.n as usize;
    let r = rule.shift_count();
    let values = exec.map_range(n * r, |i| f(&rule.point((i % n) as u64, i / n)));
    let values: Vec<f64> = values.into_iter().collect::<Result<_, _>>()?;
    let per_shift = values.chunks(n).map(mean_in_order).collect();
    Ok(QmcEstimate::from_shift_means(rule.n, rule.dimension(), per_shift))
}

fn solve_point(problem: &Problem, y: &[f64], seed: Option<&GroundPair>) -> Result<GroundPair, QmcError> {
    problem.solve_real(y, seed).map_err(|source| QmcError::Solve { point: y.to_vec(), source })
}

/// Lattice estimate of `E[functional]` for the PDE ground state.
pub fn estimate(
    problem: &Problem,
    functional: &Functional,
    rule: &LatticeRule,
    mode: SolveMode,
    exec: Exec,
) -> Result<QmcEstimate, QmcError> {
    if rule.dimension() > problem.dimension() {
        return Err(QmcError::Domain(format!(
            "rule dimension {} exceeds problem dimension {}",
            rule.dimension(),
            problem.dimension()
        )));
    }
    if let Functional::Gu { g } = functional {
        if g.len() != problem.mesh().dofs() {
            return Err(QmcError::Domain(format!(
                "dual vector has {} entries, mesh has {}",
                g.len(),
                problem.mesh().dofs()
            )));
        }
    }
    match mode {
        SolveMode::Cold => estimate_fn(|y| Ok(functional.apply(problem, &solve_point(problem, y, None)?)), rule, exec),
        SolveMode::Continuation => {
            let n = rule.n as usize;
            let shifts: Vec<usize> = (0..rule.shift_count()).collect();
            let per_shift = exec.try_map(&shifts, |&r| {
                let points: Vec<Vec<f64>> = (0..rule.n).map(|k| rule.point(k, r)).collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|a, b| points[*a][0].total_cmp(&points[*b][0]));
                let mut values = vec![0.0; n];
                let mut prev: Option<GroundPair> = None;
                for k in order {
                    let pair = match solve_point(problem, &points[k], prev.as_ref()) {
                        Ok(p) => p,
                        // a failed seeded step falls back to a cold solve
                        Err(_) => solve_point(problem, &points[k], None)?,
                    };
                    values[k] = functional.apply(problem, &pair);
                    prev = Some(pair);
                }
                Ok(mean_in_order(&values))
            })?;
            Ok(QmcEstimate::from_shift_means(rule.n, rule.dimension(), per_shift))
        }
    }
}

/// Plain Monte Carlo with `r` batches of `n` points. The batch means fill
/// `per_shift`; `rms` is the standard error of the pooled mean estimated from
/// all `n r` samples, which is far less noisy than the spread of `r` batches.
pub fn monte_carlo<F>(f: F, s: usize, n: u64, r: usize, seed: u64) -> Result<QmcEstimate, QmcError>
where
    F: Fn(&[f64]) -> Result<f64, QmcError>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n as usize * r);
    for _ in 0..n as usize * r {
        let y: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() - 0.5).collect();
        values.push(f(&y)?);
    }
    let per_shift = values.chunks(n as usize).map(mean_in_order).collect();
    let mut est = QmcEstimate::from_shift_means(n, s, per_shift);
    let total = values.len() as f64;
    let var = values.iter().map(|v| (v - est.mean).powi(2)).sum::<f64>() / (total - 1.0);
    est.rms = (var / total).sqrt();
    Ok(est)
}

/// `Π_j (1 + c_j y_j)`; its mean over the cube is 1.
pub fn product_integrand(c: &[f64], y: &[f64]) -> f64 {
    c.iter().zip(y).map(|(cj, yj)| 1.0 + cj * yj).product()
}

/// Least-squares slope of `ln v` against `ln x`; `None` with fewer than two
/// positive points.
pub fn fit_slope(x: &[f64], v: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(v).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub s: usize,
    pub r: usize,
    pub z: Vec<u64>,
    pub estimate: f64,
    pub rms: f64,
    /// Slope fitted on the rows up to and including this one.
    pub alpha_partial: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub alpha_obs: Option<f64>,
}

/// Runs `estimator` for each `N` with a freshly CBC-built rule and fits the
/// RMS decay rate.
pub fn convergence_study_with<E>(
    n_list: &[u64],
    s: usize,
    weights: &[f64],
    r: usize,
    seed: u64,
    exec: Exec,
    estimator: E,
) -> Result<ConvergenceStudy, QmcError>
where
    E: Fn(&LatticeRule) -> Result<QmcEstimate, QmcError>,
{
    if n_list.len() < 4 {
        return Err(QmcError::Domain(format!("need at least 4 values of N, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) || n_list.iter().any(|n| !is_prime(*n)) {
        return Err(QmcError::Domain("N list must be increasing primes".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rule = LatticeRule::cbc(n, s, weights, r, seed, exec)?;
        let est = estimator(&rule)?;
        rows.push(ConvergenceRow { n, s, r, z: rule.z, estimate: est.mean, rms: est.rms, alpha_partial: None });
        let xs: Vec<f64> = rows.iter().map(|row| row.n as f64).collect();
        let vs: Vec<f64> = rows.iter().map(|row| row.rms).collect();
        rows.last_mut().unwrap().alpha_partial = fit_slope(&xs, &vs);
    }
    let alpha_obs = rows.last().and_then(|row| row.alpha_partial);
    Ok(ConvergenceStudy { rows, alpha_obs })
}

/// Convergence study of `E[functional]` on the problem's full dimension.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    problem: &Problem,
    functional: &Functional,
    n_list: &[u64],
    weights: &[f64],
    r: usize,
    seed: u64,
    mode: SolveMode,
    exec: Exec,
) -> Result<ConvergenceStudy, QmcError> {
    convergence_study_with(n_list, problem.dimension(), weights, r, seed, exec, |rule| {
        estimate(problem, functional, rule, mode, exec)
    })
}

/// Convergence study of a plain integrand on `[-1/2, 1/2]^s`.
pub fn convergence_study_fn<F>(
    f: F,
    n_list: &[u64],
    s: usize,
    weights: &[f64],
    r: usize,
    seed: u64,
    exec: Exec,
) -> Result<ConvergenceStudy, QmcError>
where
    F: Fn(&[f64]) -> Result<f64, QmcError> + Sync + Send,
{
    convergence_study_with(n_list, s, weights, r, seed, exec, |rule| estimate_fn(&f, rule, exec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub s: usize,
    pub estimate: f64,
    pub rms: f64,
    /// `|estimate_s - estimate_{s_max}|`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationStudy {
    pub n: u64,
    pub rows: Vec<TruncationRow>,
    /// Slope of the difference against `s`, excluding the reference row.
    pub decay_exponent: Option<f64>,
}

/// Truncation-error proxy. All rows share one rule built for `s_max` and
/// restricted to leading coordinates, so lattice error largely cancels in the
/// differences.
#[allow(clippy::too_many_arguments)]
pub fn truncation_study(
    problem: &Problem,
    functional: &Functional,
    s_list: &[usize],
    n: u64,
    weights: &[f64],
    r: usize,
    seed: u64,
    exec: Exec,
) -> Result<TruncationStudy, QmcError> {
    if s_list.is_empty() || s_list.windows(2).any(|w| w[1] <= w[0]) || s_list[0] == 0 {
        return Err(QmcError::Domain("s list must be increasing and positive".into()));
    }
    let s_max = *s_list.last().unwrap();
    let full = LatticeRule::cbc(n, s_max, weights, r, seed, exec)?;
    let mut estimates = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let reduced = problem.truncated(s);
        estimates.push(estimate(&reduced, functional, &full.truncated(s), SolveMode::Cold, exec)?);
    }
    let reference = estimates.last().unwrap().mean;
    let rows: Vec<TruncationRow> = s_list
        .iter()
        .zip(&estimates)
        .map(|(s, e)| TruncationRow { s: *s, estimate: e.mean, rms: e.rms, difference: (e.mean - reference).abs() })
        .collect();
    let head = &rows[..rows.len() - 1];
    let xs: Vec<f64> = head.iter().map(|row| row.s as f64).collect();
    let vs: Vec<f64> = head.iter().map(|row| row.difference).collect();
    Ok(TruncationStudy { n, rows, decay_exponent: fit_slope(&xs, &vs) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_means_statistics() {
        let e = QmcEstimate::from_shift_means(7, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3, over R = 4
        assert!((e.rms - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(e.evaluations, 28);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let v: Vec<f64> = x.iter().map(|n: &f64| 3.0 * n.powf(-1.5)).collect();
        assert!((fit_slope(&x, &v).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(fit_slope(&x, &[0.0; 4]), None);
    }

    #[test]
    fn monte_carlo_standard_error() {
        // Var(y) = 1/12 on [-1/2, 1/2]
        let e = monte_carlo(|y: &[f64]| Ok(y[0]), 1, 1000, 16, 1).unwrap();
        let expect = (1.0 / 12.0 / 16000.0f64).sqrt();
        assert!((e.rms / expect - 1.0).abs() < 0.05);
        assert!(e.mean.abs() < 5.0 * expect);
    }

    #[test]
    fn zero_dual_vector_gives_zero() {
        let problem = Problem::standard_fourier(16, 2).unwrap();
        let rule = LatticeRule::new(11, vec![1, 3], 8, 0).unwrap();
        let g = vec![0.0; problem.mesh().dofs()];
        let est = estimate(&problem, &Functional::Gu { g }, &rule, SolveMode::Cold, Exec::Parallel).unwrap();
        assert_eq!((est.mean, est.rms), (0.0, 0.0));
    }

    #[test]
    fn affine_integrand_is_unbiased() {
        // per-shift error is c_j (δ_j - 1/(2N)) with δ_j uniform on [0, 1/N)
        let c = [0.7, 0.3];
        let f = |y: &[f64]| Ok(1.0 + c[0] * y[0] + c[1] * y[1]);
        let bad = (0..100u64)
            .filter(|seed| {
                let rule = LatticeRule::new(31, vec![1, 12], 16, *seed).unwrap();
                let e = estimate_fn(f, &rule, Exec::Sequential).unwrap();
                (e.mean - 1.0).abs() > 5.0 * e.rms
            })
            .count();
        assert_eq!(bad, 0);
    }

    #[test]
    fn continuation_matches_cold_start() {
        let problem = Problem::standard_fourier(32, 3).unwrap();
        let rule = LatticeRule::new(13, vec![1, 5, 3], 8, 9).unwrap();
        let cold = estimate(&problem, &Functional::Lambda, &rule, SolveMode::Cold, Exec::Parallel).unwrap();
        let warm = estimate(&problem, &Functional::Lambda, &rule, SolveMode::Continuation, Exec::Parallel).unwrap();
        for (a, b) in cold.per_shift.iter().zip(&warm.per_shift) {
            assert!((a - b).abs() < 1e-9 * a.abs());
        }
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let problem = Problem::standard_fourier(32, 4).unwrap();
        let rule = LatticeRule::cbc(17, 4, &[1.0, 0.5, 0.25, 0.125], 8, 5, Exec::Parallel).unwrap();
        let a = estimate(&problem, &Functional::Lambda, &rule, SolveMode::Cold, Exec::Parallel).unwrap();
        let b = estimate(&problem, &Functional::Lambda, &rule, SolveMode::Cold, Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
