//! Second-order central differences with one Richardson step.

use num_complex::Complex64;

use super::{check_coordinate, solve_at, tightened, to_complex, CalculusError, DerivativeEntry, Method, MultiIndex};
use crate::pde::eigen::align_to;
use crate::pde::Problem;

/// Relative precision assumed for a single eigenvalue solve.
const SOLVE_PRECISION: f64 = 1e-14;

/// `(offset, weight)` of the central stencil for `f^{(n)}`, `n <= 4`, with
/// `O(h²)` truncation error.
pub fn fd_weights(n: u32) -> Option<&'static [(i32, f64)]> {
    Some(match n {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => return None,
    })
}

fn stencil(
    problem: &Problem,
    y: &[f64],
    j: usize,
    n: u32,
    h: f64,
    base: &crate::pde::GroundPair,
) -> Result<(Complex64, Vec<Complex64>, f64), CalculusError> {
    let weights = fd_weights(n).expect("order checked by caller");
    let mut d_lambda = Complex64::default();
    let mut d_u = vec![Complex64::default(); base.u.len()];
    let mut scale = 0.0f64;
    for &(k, w) in weights {
        let pair = if k == 0 {
            base.clone()
        } else {
            let mut yk = to_complex(y);
            yk[j] += k as f64 * h;
            let mut p = solve_at(problem, &yk, j, None)?;
            align_to(&mut p.u, &base.u, problem.unit_mass());
            p
        };
        d_lambda += w * pair.lambda;
        d_u.iter_mut().zip(&pair.u).for_each(|(d, u)| *d += w * u);
        scale = scale.max(pair.lambda.norm());
    }
    let hn = h.powi(n as i32);
    d_u.iter_mut().for_each(|d| *d /= hn);
    let abs_weights: f64 = weights.iter().map(|(_, w)| w.abs()).sum();
    Ok((d_lambda / hn, d_u, SOLVE_PRECISION * scale * abs_weights / hn))
}

/// `∂_j^n λ(y)` and `‖∂_j^n u(y)‖_{H¹₀}` for real `y`, `n <= 4`, from the
/// Richardson combination of steps `h` and `h/2`. Requires
/// `|y_j| + n h <= 1`.
pub fn deriv_fd(problem: &Problem, y: &[f64], j: usize, n: u32, h: f64) -> Result<DerivativeEntry, CalculusError> {
    if n > 4 {
        return Err(CalculusError::Domain(format!("finite differences support n <= 4, got {n}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(CalculusError::Domain(format!("step h = {h} must be positive")));
    }
    let y = check_coordinate(problem, y, j, n)?;
    if y[j].abs() + n as f64 * h > 1.0 {
        return Err(CalculusError::Domain(format!("stencil y[{j}] = {} ± {n}·{h} leaves [-1, 1]", y[j])));
    }
    let problem = tightened(problem);
    let base = solve_at(&problem, &to_complex(&y), j, None)?;
    let (coarse_l, coarse_u, _) = stencil(&problem, &y, j, n, h, &base)?;
    let (fine_l, fine_u, noise) = stencil(&problem, &y, j, n, 0.5 * h, &base)?;
    let d_lambda = (4.0 * fine_l - coarse_l) / 3.0;
    let d_u: Vec<Complex64> = fine_u.iter().zip(&coarse_u).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    let est_error = if n == 0 { 0.0 } else { (fine_l - coarse_l).norm() / 3.0 + 2.0 * noise };
    Ok(DerivativeEntry {
        nu: MultiIndex::single(j, n),
        d_lambda,
        hnorm_du: problem.hnorm(&d_u),
        method: Method::Fd,
        est_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AffineField;
    use crate::pde::Mesh1D;

    #[test]
    fn stencils_are_exact_on_monomials() {
        // Σ w_k k^m = n! δ_{mn} for m <= n + 1
        for n in 0..=4u32 {
            let w = fd_weights(n).unwrap();
            for m in 0..=n + 1 {
                let moment: f64 = w.iter().map(|(k, wk)| wk * (*k as f64).powi(m as i32)).sum();
                let expect = if m == n { (1..=n).map(f64::from).product() } else { 0.0 };
                assert!((moment - expect).abs() < 1e-12, "n={n} m={m}");
            }
        }
        assert!(fd_weights(5).is_none());
    }

    #[test]
    fn constant_mode_shift() {
        let mesh = Mesh1D::uniform(32).unwrap();
        let b = AffineField::constant_modes(0.0, &[0.7]);
        let p = Problem::linear(mesh, AffineField::constant(1.0), b, AffineField::constant(1.0)).unwrap();
        let d1 = deriv_fd(&p, &[0.2], 0, 1, 0.05).unwrap();
        assert!((d1.d_lambda.re - 0.7).abs() < 1e-9);
        assert!(d1.hnorm_du < 1e-6);
        let d2 = deriv_fd(&p, &[0.2], 0, 2, 0.05).unwrap();
        assert!(d2.d_lambda.norm() <= d2.est_error.max(1e-8));
        assert!(matches!(deriv_fd(&p, &[0.9], 0, 2, 0.1), Err(CalculusError::Domain(_))));
    }
}
