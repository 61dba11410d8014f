//! Rank-1 lattice rules and component-by-component construction.

use std::f64::consts::PI;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::QmcError;
use crate::exec::Exec;

pub const MAX_POINTS: u64 = 8192;
pub const MAX_DIMENSION: usize = 64;
pub const MIN_SHIFTS: usize = 8;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Bernoulli kernel `2π² (x² - x + 1/6)`; integrates to zero over `[0, 1]`.
pub fn omega(x: f64) -> f64 {
    2.0 * PI * PI * (x * x - x + 1.0 / 6.0)
}

fn omega_table(n: u64) -> Vec<f64> {
    (0..n).map(|m| omega(m as f64 / n as f64)).collect()
}

fn check_inputs(n: u64, s: usize, weights: &[f64]) -> Result<(), QmcError> {
    if !(2..=MAX_POINTS).contains(&n) || !is_prime(n) {
        return Err(QmcError::Domain(format!("N = {n} must be a prime in 2..={MAX_POINTS}")));
    }
    if s == 0 || s > MAX_DIMENSION {
        return Err(QmcError::Domain(format!("s = {s} outside 1..={MAX_DIMENSION}")));
    }
    if weights.len() < s {
        return Err(QmcError::Domain(format!("{} weights for s = {s}", weights.len())));
    }
    if weights[..s].iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(QmcError::Domain("weights must be positive".into()));
    }
    if weights[..s].windows(2).any(|w| w[1] > w[0]) {
        return Err(QmcError::Domain("weights must be non-increasing".into()));
    }
    Ok(())
}

/// Shift-averaged squared worst-case error with product weights:
/// `(1/N) Σ_k Π_j (1 + w_j ω({k z_j / N})) - 1`.
pub fn worst_case_error_sq(n: u64, z: &[u64], weights: &[f64]) -> f64 {
    let table = omega_table(n);
    let total: f64 = (0..n)
        .map(|k| z.iter().zip(weights).map(|(zj, w)| 1.0 + w * table[((k * zj) % n) as usize]).product::<f64>())
        .sum();
    total / n as f64 - 1.0
}

/// Errors `e²_d` of every candidate `z_d ∈ 1..N` given the running products.
fn candidate_errors(n: u64, table: &[f64], products: &[f64], w: f64, exec: Exec) -> Vec<f64> {
    exec.map_range((n - 1) as usize, |idx| {
        let z = idx as u64 + 1;
        let mut sum = 0.0;
        for (k, p) in products.iter().enumerate() {
            sum += p * (1.0 + w * table[((k as u64 * z) % n) as usize]);
        }
        sum / n as f64 - 1.0
    })
}

/// Relative margin by which a later candidate must win; `z` and `N - z` give
/// the same error up to rounding.
const TIE_TOLERANCE: f64 = 1e-12;

/// Greedy CBC: `z_1 = 1` (all choices are equivalent in one dimension), then
/// each `z_d` minimises `e²_d` with earlier components fixed; ties within
/// rounding go to the smallest candidate. Naive `O(s N²)` search.
pub fn cbc_construct(n: u64, s: usize, weights: &[f64], exec: Exec) -> Result<Vec<u64>, QmcError> {
    Ok(cbc_with_errors(n, s, weights, exec)?.0)
}

/// [`cbc_construct`] also returning `e²_d` after each component.
pub fn cbc_with_errors(n: u64, s: usize, weights: &[f64], exec: Exec) -> Result<(Vec<u64>, Vec<f64>), QmcError> {
    check_inputs(n, s, weights)?;
    let table = omega_table(n);
    let mut products = vec![1.0; n as usize];
    let mut z = Vec::with_capacity(s);
    let mut errors = Vec::with_capacity(s);
    for (d, w) in weights[..s].iter().enumerate() {
        let zd = if d == 0 {
            1
        } else {
            let errs = candidate_errors(n, &table, &products, *w, exec);
            let best = errs.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, e)| {
                if i == 0 || *e < acc.1 - TIE_TOLERANCE * acc.1.abs() {
                    (i, *e)
                } else {
                    acc
                }
            });
            best.0 as u64 + 1
        };
        for (k, p) in products.iter_mut().enumerate() {
            *p *= 1.0 + w * table[((k as u64 * zd) % n) as usize];
        }
        errors.push(products.iter().sum::<f64>() / n as f64 - 1.0);
        z.push(zd);
    }
    Ok((z, errors))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRule {
    pub n: u64,
    pub z: Vec<u64>,
    /// Random shifts in `[0, 1)^s`.
    pub shifts: Vec<Vec<f64>>,
    pub seed: u64,
}

impl LatticeRule {
    /// Rule with `r` shifts drawn from a ChaCha stream seeded by `seed`.
    pub fn new(n: u64, z: Vec<u64>, r: usize, seed: u64) -> Result<Self, QmcError> {
        if !is_prime(n) || n > MAX_POINTS {
            return Err(QmcError::Domain(format!("N = {n} must be a prime <= {MAX_POINTS}")));
        }
        if let Some(zj) = z.iter().find(|zj| **zj == 0 || **zj >= n || zj.gcd(&n) != 1) {
            return Err(QmcError::Domain(format!("generator component {zj} not a unit mod {n}")));
        }
        if r < MIN_SHIFTS {
            return Err(QmcError::Domain(format!("R = {r} below the minimum {MIN_SHIFTS}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts = (0..r).map(|_| (0..z.len()).map(|_| rng.gen::<f64>()).collect()).collect();
        Ok(Self { n, z, shifts, seed })
    }

    /// CBC generator for `weights` and `r` seeded shifts.
    pub fn cbc(n: u64, s: usize, weights: &[f64], r: usize, seed: u64, exec: Exec) -> Result<Self, QmcError> {
        Self::new(n, cbc_construct(n, s, weights, exec)?, r, seed)
    }

    pub fn dimension(&self) -> usize {
        self.z.len()
    }

    pub fn shift_count(&self) -> usize {
        self.shifts.len()
    }

    /// Rule on the first `s` coordinates with the same shifts.
    pub fn truncated(&self, s: usize) -> Self {
        Self {
            n: self.n,
            z: self.z[..s].to_vec(),
            shifts: self.shifts.iter().map(|d| d[..s].to_vec()).collect(),
            seed: self.seed,
        }
    }

    /// Unshifted point `k` in `[0, 1)^s`, by exact integer residues.
    pub fn base_point(&self, k: u64) -> Vec<f64> {
        self.z.iter().map(|zj| ((k * zj) % self.n) as f64 / self.n as f64).collect()
    }

    /// `{k z / N + Δ_r} - 1/2 ∈ [-1/2, 1/2)^s`.
    pub fn point(&self, k: u64, r: usize) -> Vec<f64> {
        self.z
            .iter()
            .zip(&self.shifts[r])
            .map(|(zj, d)| {
                let x = ((k * zj) % self.n) as f64 / self.n as f64 + d;
                (x - x.floor()) - 0.5
            })
            .collect()
    }
}
