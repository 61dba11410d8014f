//! Cauchy-integral derivatives: trapezoid rule on circles in one or two
//! coordinates, evaluated by continuing the ground pair point to point.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_coordinate, factorial_f64, solve_at, tightened, to_complex, CalculusError, DerivativeEntry, Method,
    MultiIndex, MAX_ORDER,
};
use crate::exec::Exec;
use crate::pde::sparse::norm2;
use crate::pde::{GroundPair, Problem};

/// Fraction of the stadium radius used as contour radius.
pub const THETA_SAFETY: f64 = 0.5;
/// Relative mismatch allowed when a continuation returns to its start.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Smallest admissible power of two `Q >= max(32, 4 n_max)`.
pub fn default_quadrature(n_max: u32) -> usize {
    (4 * n_max as usize).max(32).next_power_of_two()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub j: usize,
    pub radius: f64,
    /// Quadrature points on the circle.
    pub q: usize,
    /// Continuation sub-steps between neighbouring quadrature points.
    pub steps: usize,
}

impl ContourSpec {
    pub fn new(j: usize, radius: f64, n_max: u32) -> Self {
        Self { j, radius, q: default_quadrature(n_max), steps: 1 }
    }

    /// Radius `THETA_SAFETY · stadium_radius`.
    pub fn from_stadium(j: usize, stadium_radius: f64, n_max: u32) -> Self {
        Self::new(j, THETA_SAFETY * stadium_radius, n_max)
    }

    pub fn with_quadrature(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn validate(&self, n_max: u32) -> Result<(), CalculusError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(CalculusError::Domain(format!("contour radius {} must be positive", self.radius)));
        }
        if !self.q.is_power_of_two() || self.q < 32 {
            return Err(CalculusError::Domain(format!("Q = {} must be a power of two >= 32", self.q)));
        }
        if self.q < 4 * n_max as usize {
            return Err(CalculusError::Domain(format!("Q = {} below 4·n_max = {}", self.q, 4 * n_max)));
        }
        if self.steps == 0 {
            return Err(CalculusError::Domain("continuation steps must be >= 1".into()));
        }
        Ok(())
    }
}

fn closure_mismatch(a: &GroundPair, b: &GroundPair) -> f64 {
    let dl = (a.lambda - b.lambda).norm() / a.lambda.norm().max(1.0);
    let du: Vec<Complex64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
    dl.max(norm2(&du) / norm2(&a.u).max(f64::MIN_POSITIVE))
}

/// Ground pairs at `y + radius·e^{2πiq/Q} e_j`, `q = 0..Q`, continued from
/// `base` (the pair at `y`): first radially out to the circle, then around
/// it and back to the first point. Returns the pairs and the closure mismatch.
pub fn circle_pairs(
    problem: &Problem,
    y: &[Complex64],
    base: &GroundPair,
    j: usize,
    radius: f64,
    q: usize,
    steps: usize,
) -> Result<(Vec<GroundPair>, f64), CalculusError> {
    let center = y[j];
    let mut z = y.to_vec();
    let mut current = base.clone();
    let radial = ((steps * q) as f64 / (2.0 * PI)).ceil().max(1.0) as usize;
    for k in 1..=radial {
        z[j] = center + radius * k as f64 / radial as f64;
        current = solve_at(problem, &z, j, Some(&current))?;
    }
    let mut pairs = Vec::with_capacity(q);
    pairs.push(current.clone());
    for idx in 1..=q {
        for s in 1..=steps {
            let phi = 2.0 * PI * ((idx - 1) as f64 + s as f64 / steps as f64) / q as f64;
            z[j] = center + Complex64::from_polar(radius, phi);
            if idx == q && s == steps {
                // land exactly on the first point
                z[j] = center + radius;
            }
            current = solve_at(problem, &z, j, Some(&current))?;
        }
        if idx < q {
            pairs.push(current.clone());
        }
    }
    let mismatch = closure_mismatch(&pairs[0], &current);
    if mismatch > CLOSURE_TOL {
        return Err(CalculusError::LoopClosure { coord: j, radius, mismatch });
    }
    Ok((pairs, mismatch))
}

/// `(1/Q) Σ_q f_q e^{-2πiqn/Q}` over every `stride`-th sample.
fn fourier_coefficient(samples: &[Complex64], n: u32, stride: usize) -> Complex64 {
    let q = samples.len();
    let count = q / stride;
    let mut s = Complex64::default();
    for k in (0..q).step_by(stride) {
        s += samples[k] * Complex64::from_polar(1.0, -2.0 * PI * (k as f64) * n as f64 / q as f64);
    }
    s / count as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourResult {
    /// Entries for `n = 0..=n_max`.
    pub entries: Vec<DerivativeEntry>,
    /// Relative loop-closure mismatch.
    pub closure: f64,
}

/// `∂_j^n λ(y)`, `n = 0..=n_max`, by the trapezoid rule on the circle
/// `|z - y_j| = spec.radius`. The error estimate is the change against the
/// half-resolution rule.
pub fn deriv_contour(
    problem: &Problem,
    y: &[f64],
    spec: &ContourSpec,
    n_max: u32,
) -> Result<ContourResult, CalculusError> {
    spec.validate(n_max)?;
    let y = check_coordinate(problem, y, spec.j, n_max)?;
    let problem = tightened(problem);
    let yc = to_complex(&y);
    let base = solve_at(&problem, &yc, spec.j, None)?;
    let (pairs, closure) = circle_pairs(&problem, &yc, &base, spec.j, spec.radius, spec.q, spec.steps)?;
    let lambdas: Vec<Complex64> = pairs.iter().map(|p| p.lambda).collect();
    let fmax = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let entries = (0..=n_max)
        .map(|n| {
            let scale = factorial_f64(n) / spec.radius.powi(n as i32);
            let fine = fourier_coefficient(&lambdas, n, 1);
            let coarse = fourier_coefficient(&lambdas, n, 2);
            let d_u: Vec<Complex64> = (0..base.u.len())
                .map(|i| {
                    let col: Vec<Complex64> = pairs.iter().map(|p| p.u[i]).collect();
                    scale * fourier_coefficient(&col, n, 1)
                })
                .collect();
            DerivativeEntry {
                nu: MultiIndex::single(spec.j, n),
                d_lambda: scale * fine,
                hnorm_du: problem.hnorm(&d_u),
                method: Method::Contour,
                est_error: scale * ((fine - coarse).norm() + 1e-14 * fmax),
            }
        })
        .collect();
    Ok(ContourResult { entries, closure })
}

/// `∂^ν λ(y)` for `|support(ν)| <= 2` by nested contours: an outer circle in
/// the first support coordinate, and for each of its points an inner circle
/// in the second. `specs` must contain one entry per support coordinate.
pub fn deriv_mixed(
    problem: &Problem,
    y: &[f64],
    nu: &MultiIndex,
    specs: &[ContourSpec],
    exec: Exec,
) -> Result<DerivativeEntry, CalculusError> {
    if nu.support() > 2 || nu.order() > MAX_ORDER {
        return Err(CalculusError::Domain(format!("multi-index {nu} outside support <= 2, order <= {MAX_ORDER}")));
    }
    let spec_for = |j: usize| {
        specs
            .iter()
            .find(|s| s.j == j)
            .copied()
            .ok_or_else(|| CalculusError::Domain(format!("no contour spec for coordinate {j}")))
    };
    match nu.entries() {
        [] => {
            let y = check_coordinate(problem, y, 0, 0)?;
            let problem = tightened(problem);
            let pair = solve_at(&problem, &to_complex(&y), 0, None)?;
            Ok(DerivativeEntry {
                nu: nu.clone(),
                d_lambda: pair.lambda,
                hnorm_du: problem.hnorm(&pair.u),
                method: Method::Contour,
                est_error: 0.0,
            })
        }
        [(j, n)] => {
            let res = deriv_contour(problem, y, &spec_for(*j)?, *n)?;
            Ok(res.entries[*n as usize].clone())
        }
        [(j1, n1), (j2, n2)] => {
            let (s1, s2) = (spec_for(*j1)?, spec_for(*j2)?);
            s1.validate(*n1)?;
            s2.validate(*n2)?;
            let y = check_coordinate(problem, y, (*j1).max(*j2), 0)?;
            let problem = tightened(problem);
            let yc = to_complex(&y);
            let base = solve_at(&problem, &yc, *j1, None)?;
            let (outer, _) = circle_pairs(&problem, &yc, &base, *j1, s1.radius, s1.q, s1.steps)?;
            let rows = exec.try_map(&(0..s1.q).collect::<Vec<_>>(), |&k| {
                let mut z = yc.clone();
                z[*j1] = yc[*j1] + Complex64::from_polar(s1.radius, 2.0 * PI * k as f64 / s1.q as f64);
                circle_pairs(&problem, &z, &outer[k], *j2, s2.radius, s2.q, s2.steps).map(|(p, _)| p)
            })?;
            let scale =
                factorial_f64(*n1) * factorial_f64(*n2) / (s1.radius.powi(*n1 as i32) * s2.radius.powi(*n2 as i32));
            let tensor = |values: &dyn Fn(&GroundPair) -> Complex64, stride: usize| {
                let inner: Vec<Complex64> = rows
                    .iter()
                    .map(|row| {
                        let col: Vec<Complex64> = row.iter().map(values).collect();
                        fourier_coefficient(&col, *n2, stride)
                    })
                    .collect();
                fourier_coefficient(&inner, *n1, stride)
            };
            let fine = tensor(&|p| p.lambda, 1);
            let coarse = tensor(&|p| p.lambda, 2);
            let fmax = rows.iter().flatten().map(|p| p.lambda.norm()).fold(0.0, f64::max);
            let d_u: Vec<Complex64> = (0..base.u.len()).map(|i| scale * tensor(&|p| p.u[i], 1)).collect();
            Ok(DerivativeEntry {
                nu: nu.clone(),
                d_lambda: scale * fine,
                hnorm_du: problem.hnorm(&d_u),
                method: Method::Contour,
                est_error: scale * ((fine - coarse).norm() + 1e-14 * fmax),
            })
        }
        _ => unreachable!("support checked above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiusSearch {
    pub start: f64,
    pub cap: f64,
    pub bisections: u32,
    pub q: usize,
    /// Largest continuation step along the circle.
    pub max_arc: f64,
}

impl Default for RadiusSearch {
    fn default() -> Self {
        Self { start: 0.05, cap: 16.0, bisections: 6, q: 32, max_arc: 0.05 }
    }
}

/// Empirical analyticity radius in coordinate `j` at real `y`: the largest
/// radius found by doubling then bisection for which the continued contour
/// closes. Returns `search.cap` if every tried radius closes and `0` if
/// none does.
pub fn radius_estimate(problem: &Problem, y: &[f64], j: usize, search: &RadiusSearch) -> f64 {
    let Ok(y) = check_coordinate(problem, y, j, 0) else {
        return 0.0;
    };
    let problem = tightened(problem);
    let yc = to_complex(&y);
    let Ok(base) = solve_at(&problem, &yc, j, None) else {
        return 0.0;
    };
    let closes = |r: f64| {
        let arc = 2.0 * PI * r / search.q as f64;
        let steps = ((arc / search.max_arc).ceil() as usize).clamp(1, 64);
        circle_pairs(&problem, &yc, &base, j, r, search.q, steps).is_ok()
    };
    let (mut lo, mut hi) = (0.0, None);
    let mut r = search.start;
    while r < search.cap {
        if closes(r) {
            lo = r;
            r *= 2.0;
        } else {
            hi = Some(r);
            break;
        }
    }
    let mut hi = match hi {
        Some(h) => h,
        None if closes(search.cap) => return search.cap,
        None => search.cap,
    };
    for _ in 0..search.bisections {
        let mid = 0.5 * (lo + hi);
        if closes(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
