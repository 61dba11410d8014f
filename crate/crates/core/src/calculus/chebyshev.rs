//! Chebyshev interpolation of `t ↦ λ(y + (t - y_j) e_j)` on `[-1, 1]`.

use num_complex::Complex64;

use super::{check_coordinate, solve_at, tightened, to_complex, CalculusError, DerivativeEntry, Method, MultiIndex};
use crate::pde::eigen::align_to;
use crate::pde::Problem;

pub const CHEB_DEGREE: usize = 32;

/// Coefficients `c_m` of `Σ c_m T_m` interpolating `values[k] = f(cos(πk/N))`.
pub fn cheb_coefficients(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    let nf = n as f64;
    (0..=n)
        .map(|m| {
            let mut s = Complex64::default();
            for (k, v) in values.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                s += w * v * (std::f64::consts::PI * (m * k) as f64 / nf).cos();
            }
            let scale = if m == 0 || m == n { 1.0 / nf } else { 2.0 / nf };
            s * scale
        })
        .collect()
}

/// Coefficients of the derivative series.
pub fn cheb_derivative_coefficients(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let mut d = vec![Complex64::default(); n + 1];
    for m in (1..n).rev() {
        d[m - 1] = d[m + 1] + 2.0 * m as f64 * c[m];
    }
    d[0] *= 0.5;
    d.truncate(n);
    d
}

/// Clenshaw evaluation of `Σ c_m T_m(x)`.
pub fn cheb_eval(c: &[Complex64], x: f64) -> Complex64 {
    let (mut b1, mut b2) = (Complex64::default(), Complex64::default());
    for cm in c.iter().skip(1).rev() {
        let b0 = cm + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or_default() + x * b1 - b2
}

fn differentiate(c: &[Complex64], n: u32) -> Vec<Complex64> {
    (0..n).fold(c.to_vec(), |acc, _| cheb_derivative_coefficients(&acc))
}

/// Drops the tail of coefficients below `floor`; high-order derivatives of
/// rounding noise in that tail otherwise dominate. Returns the kept degree.
pub(crate) fn chop(c: &mut [Complex64], floor: f64) -> usize {
    let keep = c.iter().rposition(|v| v.norm() > floor).unwrap_or(0);
    c.iter_mut().skip(keep + 1).for_each(|v| *v = Complex64::default());
    keep
}

/// `Σ_m |T_m^{(n)}(x)|`: amplification of uniform coefficient noise.
fn noise_gain(degree: usize, n: u32, x: f64) -> f64 {
    (0..=degree)
        .map(|m| {
            let mut e = vec![Complex64::default(); degree + 1];
            e[m] = Complex64::new(1.0, 0.0);
            cheb_eval(&differentiate(&e, n), x).norm()
        })
        .sum()
}

/// `∂_j^n λ(y)` for `n = 0..=n_max` from a degree-32 interpolant on the real
/// segment `y_j ∈ [-1, 1]`, other coordinates fixed.
pub fn deriv_chebyshev(
    problem: &Problem,
    y: &[f64],
    j: usize,
    n_max: u32,
) -> Result<Vec<DerivativeEntry>, CalculusError> {
    let y = check_coordinate(problem, y, j, n_max)?;
    if y[j].abs() > 1.0 {
        return Err(CalculusError::Domain(format!("y[{j}] = {} outside [-1, 1]", y[j])));
    }
    let problem = tightened(problem);
    let base = solve_at(&problem, &to_complex(&y), j, None)?;
    let mut lambdas = Vec::with_capacity(CHEB_DEGREE + 1);
    let mut us = Vec::with_capacity(CHEB_DEGREE + 1);
    for k in 0..=CHEB_DEGREE {
        let mut yk = to_complex(&y);
        yk[j] = Complex64::new((std::f64::consts::PI * k as f64 / CHEB_DEGREE as f64).cos(), 0.0);
        let mut pair = solve_at(&problem, &yk, j, None)?;
        align_to(&mut pair.u, &base.u, problem.unit_mass());
        lambdas.push(pair.lambda);
        us.push(pair.u);
    }
    let mut c_lambda = cheb_coefficients(&lambdas);
    let fmax = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    // unresolved interpolants keep their last coefficients as the noise level
    let noise = c_lambda[CHEB_DEGREE].norm().max(c_lambda[CHEB_DEGREE - 1].norm()).max(4.0 * f64::EPSILON * fmax);
    let kept = chop(&mut c_lambda, noise);
    let umax = us.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let dofs = base.u.len();
    let c_u: Vec<Vec<Complex64>> = (0..dofs)
        .map(|i| {
            let mut c = cheb_coefficients(&us.iter().map(|u| u[i]).collect::<Vec<_>>());
            chop(&mut c, 4.0 * f64::EPSILON * umax);
            c
        })
        .collect();
    let x = y[j];
    Ok((0..=n_max)
        .map(|n| {
            let d_u: Vec<Complex64> = c_u.iter().map(|c| cheb_eval(&differentiate(c, n), x)).collect();
            DerivativeEntry {
                nu: MultiIndex::single(j, n),
                d_lambda: cheb_eval(&differentiate(&c_lambda, n), x),
                hnorm_du: problem.hnorm(&d_u),
                method: Method::Chebyshev,
                est_error: noise * noise_gain((kept + 1).min(CHEB_DEGREE), n, x),
            }
        })
        .collect())
}
