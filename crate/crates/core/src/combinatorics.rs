//! Exact integer sequences governing single-coordinate derivative growth.
//!
//! Two growth rules are supported. The linear eigenvalue problem uses the
//! quadruple factorial numbers `α_n = (2(n-1))!/(n-1)!`, generated by the
//! binomial convolution `α_n = Σ_{m=1}^{n-1} C(n,m) α_{n-m} α_m` with
//! `α_1 = 1`. The semilinear problem uses plain factorials. All arithmetic
//! is arbitrary precision so the identities hold with zero tolerance.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest index accepted by [`alpha`] and [`catalan`].
pub const MAX_INDEX: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombinatoricsError {
    #[error("index {n} outside the supported range 1..={max}")]
    Domain { n: u32, max: u32 },
}

/// Growth rule for the derivative bound sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    /// `(2(n-1))!/(n-1)!`, ratio limit 1/4.
    QuadrupleFactorial,
    /// `n!`, ratio limit 1.
    Factorial,
}

impl AlphaRule {
    /// Limit of `α_n (n+1) / α_{n+1}`; the holomorphy parameter ε.
    pub fn eps(self) -> f64 {
        match self {
            AlphaRule::QuadrupleFactorial => 0.25,
            AlphaRule::Factorial => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlphaRule::QuadrupleFactorial => "quad",
            AlphaRule::Factorial => "factorial",
        }
    }
}

impl std::str::FromStr for AlphaRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quad" | "quadruple" | "quadruple_factorial" => Ok(AlphaRule::QuadrupleFactorial),
            "factorial" => Ok(AlphaRule::Factorial),
            other => Err(format!("unknown alpha rule `{other}` (expected quad|factorial)")),
        }
    }
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    // Running product stays integral: C(n-k+i, i) at every step.
    (1..=k).fold(BigUint::one(), |acc, i| acc * (n - k + i) / i)
}

fn check_index(n: u32) -> Result<(), CombinatoricsError> {
    if n == 0 || n > MAX_INDEX {
        Err(CombinatoricsError::Domain { n, max: MAX_INDEX })
    } else {
        Ok(())
    }
}

/// Quadruple factorial numbers `α_1..=α_n` from the binomial convolution.
/// Index 0 of the returned vector holds the convention `α_0 = 1`.
pub fn quad_by_recurrence(n_max: u32) -> Vec<BigUint> {
    let mut alpha = vec![BigUint::one(); n_max as usize + 1];
    for n in 2..=n_max {
        let mut acc = BigUint::zero();
        for m in 1..n {
            acc += binomial(n, m) * &alpha[(n - m) as usize] * &alpha[m as usize];
        }
        alpha[n as usize] = acc;
    }
    alpha
}

/// `(2(n-1))!/(n-1)!` evaluated as a falling product.
pub fn quad_closed_form(n: u32) -> BigUint {
    if n <= 1 {
        return BigUint::one();
    }
    // (2n-2)!/(n-1)! = n (n+1) ... (2n-2)
    (n..=2 * n - 2).fold(BigUint::one(), |acc, k| acc * k)
}

/// `α_n` under `rule`. The quadruple factorial value is produced by the
/// recurrence and the closed form; the two must coincide.
pub fn alpha(n: u32, rule: AlphaRule) -> Result<BigUint, CombinatoricsError> {
    check_index(n)?;
    Ok(match rule {
        AlphaRule::Factorial => factorial(n),
        AlphaRule::QuadrupleFactorial => {
            let rec = quad_by_recurrence(n).swap_remove(n as usize);
            let closed = quad_closed_form(n);
            assert_eq!(rec, closed, "recurrence and closed form disagree at n = {n}");
            closed
        }
    })
}

/// `α_0..=α_{n_max}` with `α_0 = 1` (the Taylor-sum convention).
pub fn alpha_table(n_max: u32, rule: AlphaRule) -> Result<Vec<BigUint>, CombinatoricsError> {
    if n_max > MAX_INDEX {
        return Err(CombinatoricsError::Domain { n: n_max, max: MAX_INDEX });
    }
    Ok(match rule {
        AlphaRule::Factorial => (0..=n_max).map(factorial).collect(),
        AlphaRule::QuadrupleFactorial => {
            let rec = quad_by_recurrence(n_max);
            for (n, v) in rec.iter().enumerate().skip(1) {
                assert_eq!(*v, quad_closed_form(n as u32));
            }
            rec
        }
    })
}

/// `α_n` as a float, for bound evaluation. `n = 0` maps to 1.
pub fn alpha_f64(n: u32, rule: AlphaRule) -> f64 {
    match rule {
        AlphaRule::Factorial => (1..=n).map(f64::from).product(),
        AlphaRule::QuadrupleFactorial => {
            if n <= 1 {
                1.0
            } else {
                (n..=2 * n - 2).map(f64::from).product()
            }
        }
    }
}

/// The n-th Catalan number `(2n)! / (n! (n+1)!)`.
pub fn catalan(n: u32) -> Result<BigUint, CombinatoricsError> {
    if n > MAX_INDEX {
        return Err(CombinatoricsError::Domain { n, max: MAX_INDEX });
    }
    Ok(factorial(2 * n) / (factorial(n) * factorial(n + 1)))
}

/// `α_n (n+1) / α_{n+1}` as an exact rational.
pub fn epsilon_ratio(n: u32, rule: AlphaRule) -> Result<BigRational, CombinatoricsError> {
    check_index(n)?;
    check_index(n + 1)?;
    let num = alpha(n, rule)? * (n + 1);
    let den = alpha(n + 1, rule)?;
    Ok(BigRational::new(num.into(), den.into()))
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Binomial convolution `Σ_{k=1}^{n-1} C(n,k) α_k α_{n-k}` on a precomputed table.
pub fn convolution(n: u32, table: &[BigUint]) -> BigUint {
    (1..n).map(|k| binomial(n, k) * &table[k as usize] * &table[(n - k) as usize]).sum()
}

/// One CSV row of the `alpha` subcommand.
#[derive(Debug, Clone)]
pub struct AlphaRow {
    pub n: u32,
    pub alpha: BigUint,
    /// `α_n (n+1) / α_{n+1}`; absent on the last row.
    pub ratio: Option<BigRational>,
}

pub fn alpha_rows(n_max: u32, rule: AlphaRule) -> Result<Vec<AlphaRow>, CombinatoricsError> {
    check_index(n_max)?;
    let table = alpha_table(n_max.saturating_add(1).min(MAX_INDEX), rule)?;
    Ok((1..=n_max)
        .map(|n| {
            let ratio = table
                .get(n as usize + 1)
                .map(|next| BigRational::new((&table[n as usize] * (n + 1)).into(), next.clone().into()));
            AlphaRow { n, alpha: table[n as usize].clone(), ratio }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_values() {
        assert_eq!(alpha(1, AlphaRule::QuadrupleFactorial).unwrap(), big(1));
        assert_eq!(alpha(3, AlphaRule::QuadrupleFactorial).unwrap(), big(12));
        // 8!/4! = 40320/24
        assert_eq!(alpha(5, AlphaRule::QuadrupleFactorial).unwrap(), big(1680));
        assert_eq!(alpha(6, AlphaRule::QuadrupleFactorial).unwrap(), big(30240));
        assert_eq!(alpha(4, AlphaRule::Factorial).unwrap(), big(24));
    }

    #[test]
    fn domain_errors() {
        assert!(alpha(0, AlphaRule::QuadrupleFactorial).is_err());
        assert!(alpha(65, AlphaRule::Factorial).is_err());
        assert!(catalan(65).is_err());
        assert_eq!(alpha(64, AlphaRule::QuadrupleFactorial).unwrap(), quad_closed_form(64));
    }

    #[test]
    fn catalan_values() {
        assert_eq!(catalan(0).unwrap(), big(1));
        assert_eq!(catalan(3).unwrap(), big(5));
        assert_eq!(catalan(10).unwrap(), big(16796));
    }

    #[test]
    fn ratios() {
        let r = |n, rule| epsilon_ratio(n, rule).unwrap();
        let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(r(2, AlphaRule::QuadrupleFactorial), q(1, 2));
        assert_eq!(r(3, AlphaRule::QuadrupleFactorial), q(2, 5));
        assert_eq!(r(7, AlphaRule::Factorial), q(1, 1));
        // n(n+1) / ((2n)(2n-1))
        for n in 1..40 {
            let n64 = n as i64;
            assert_eq!(r(n, AlphaRule::QuadrupleFactorial), q(n64 * (n64 + 1), 2 * n64 * (2 * n64 - 1)));
        }
    }

    #[test]
    fn catalan_convolution_identity() {
        // N! C_{N-1} = Σ C(N,k) α_k α_{N-k}
        let table = quad_by_recurrence(20);
        for n in 2..=20 {
            assert_eq!(convolution(n, &table), table[n as usize]);
            assert_eq!(factorial(n) * catalan(n - 1).unwrap(), table[n as usize]);
        }
    }

    #[test]
    fn float_alpha_matches_exact() {
        for n in 1..=20 {
            for rule in [AlphaRule::QuadrupleFactorial, AlphaRule::Factorial] {
                let exact = alpha(n, rule).unwrap().to_f64().unwrap();
                assert!((alpha_f64(n, rule) - exact).abs() <= 1e-12 * exact);
            }
        }
        assert_eq!(alpha_f64(0, AlphaRule::QuadrupleFactorial), 1.0);
    }

    #[test]
    fn table_rows_carry_ratios() {
        let rows = alpha_rows(6, AlphaRule::QuadrupleFactorial).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[5].alpha, big(30240));
        assert!(rows.iter().all(|r| r.ratio.is_some()));
        let rows = alpha_rows(64, AlphaRule::Factorial).unwrap();
        assert!(rows.last().unwrap().ratio.is_none());
    }
}
