//! Bernstein ellipses, stadium regions around `[-1, 1]`, and admissibility
//! of polyradius sequences.
//!
//! All sets are closed: boundary points and equality in the admissibility
//! budget count as inside.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("ellipse parameter rho_{index} = {value} must exceed 1")]
    RhoNotAboveOne { index: usize, value: f64 },
    #[error("sequence lengths differ: {rho} radii against {b} weights")]
    LengthMismatch { rho: usize, b: usize },
    #[error("invalid profile: {0}")]
    Profile(String),
}

/// Closed Bernstein ellipse with foci ±1, image of `|w| = rho` under `(w + 1/w)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinEllipse {
    rho: f64,
}

impl BernsteinEllipse {
    pub fn new(rho: f64) -> Result<Self, GeometryError> {
        if rho.is_nan() || rho <= 1.0 {
            return Err(GeometryError::RhoNotAboveOne { index: 0, value: rho });
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn semi_minor(&self) -> f64 {
        semi_minor(self.rho)
    }

    pub fn semi_major(&self) -> f64 {
        semi_major(self.rho)
    }

    /// Focal-sum test `|z-1| + |z+1| <= rho + 1/rho`.
    pub fn contains(&self, z: Complex64) -> bool {
        (z - 1.0).norm() + (z + 1.0).norm() <= self.rho + 1.0 / self.rho
    }

    /// Point on the boundary at angle `theta`.
    pub fn boundary_point(&self, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(self.rho, theta);
        (w + w.inv()) * 0.5
    }

    /// `samples` boundary points equally spaced in the Joukowski angle.
    pub fn boundary(&self, samples: usize) -> impl Iterator<Item = Complex64> + '_ {
        let step = std::f64::consts::TAU / samples as f64;
        (0..samples).map(move |k| self.boundary_point(step * k as f64))
    }
}

/// `(rho - 1/rho)/2`.
pub fn semi_minor(rho: f64) -> f64 {
    0.5 * (rho - 1.0 / rho)
}

/// `(rho + 1/rho)/2`.
pub fn semi_major(rho: f64) -> f64 {
    0.5 * (rho + 1.0 / rho)
}

/// Points within `radius` of the segment `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stadium {
    pub radius: f64,
}

impl Stadium {
    pub fn new(radius: f64) -> Self {
        Self { radius }
    }

    /// Stadium of the coordinate with weight `b_j`: radius `eps / b_j`.
    pub fn for_weight(eps: f64, b: f64) -> Self {
        Self { radius: eps / b }
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        distance_to_segment(z)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        distance_to_segment(z) <= self.radius
    }
}

/// Distance from `z` to `[-1, 1]` by clamping the real part.
pub fn distance_to_segment(z: Complex64) -> f64 {
    let x = z.re.clamp(-1.0, 1.0);
    (z - x).norm()
}

pub fn ellipse_contains(e: &BernsteinEllipse, z: Complex64) -> bool {
    e.contains(z)
}

pub fn stadium_contains(st: &Stadium, z: Complex64) -> bool {
    st.contains(z)
}

/// Which budget the admissibility check enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// `Σ_j b_j (rho_j - 1) <= eps`.
    #[default]
    Sum,
    /// `max_j b_j (rho_j - 1) <= eps`, the weaker per-coordinate form.
    Max,
}

/// Weight sequence `b`, budget `eps` and summability exponent `p` of a
/// `(b, eps)` holomorphy class, truncated to `b.len()` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleProfile {
    pub b: Vec<f64>,
    pub eps: f64,
    pub p: f64,
}

impl AdmissibleProfile {
    pub fn new(b: Vec<f64>, eps: f64, p: f64) -> Result<Self, GeometryError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(GeometryError::Profile(format!("eps = {eps} must be positive")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(GeometryError::Profile(format!("p = {p} outside (0, 1]")));
        }
        if let Some(j) = b.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(GeometryError::Profile(format!("b_{} = {} is not positive", j + 1, b[j])));
        }
        if let Some(j) = b.windows(2).position(|w| w[1] > w[0]) {
            return Err(GeometryError::Profile(format!(
                "b is not non-increasing at j = {}: {} < {}",
                j + 2,
                b[j],
                b[j + 1]
            )));
        }
        Ok(Self { b, eps, p })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn power_sum(&self) -> f64 {
        self.b.iter().map(|v| v.powf(self.p)).sum()
    }

    pub fn stadium(&self, j: usize) -> Stadium {
        Stadium::for_weight(self.eps, self.b[j])
    }

    /// `b_j (rho_j - 1)` summed or maximised according to `budget`.
    pub fn budget_used(&self, rho: &[f64], budget: Budget) -> Result<f64, GeometryError> {
        check_rho(rho)?;
        if rho.len() > self.b.len() {
            return Err(GeometryError::LengthMismatch { rho: rho.len(), b: self.b.len() });
        }
        let terms = self.b.iter().zip(rho).map(|(b, r)| b * (r - 1.0));
        Ok(match budget {
            Budget::Sum => terms.sum(),
            Budget::Max => terms.fold(0.0, f64::max),
        })
    }
}

fn check_rho(rho: &[f64]) -> Result<(), GeometryError> {
    match rho.iter().position(|r| r.is_nan() || *r <= 1.0) {
        Some(j) => Err(GeometryError::RhoNotAboveOne { index: j + 1, value: rho[j] }),
        None => Ok(()),
    }
}

/// `Σ_{j<=s} b_j (rho_j - 1) <= eps`; coordinates beyond `rho.len()` are
/// treated as `rho_j = 1`.
pub fn is_admissible(rho: &[f64], profile: &AdmissibleProfile) -> Result<bool, GeometryError> {
    is_admissible_with(rho, profile, Budget::Sum)
}

pub fn is_admissible_with(rho: &[f64], profile: &AdmissibleProfile, budget: Budget) -> Result<bool, GeometryError> {
    Ok(profile.budget_used(rho, budget)? <= profile.eps)
}

/// Outcome of testing `E_rho ⊂ H` by boundary sampling and by the two
/// axis inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InclusionCheck {
    pub sampled: bool,
    pub analytic: bool,
    /// Largest distance from a sampled boundary point to `[-1, 1]`.
    pub max_distance: f64,
}

impl InclusionCheck {
    pub fn included(&self) -> bool {
        self.sampled && self.analytic
    }

    pub fn disagreement(&self) -> bool {
        self.sampled != self.analytic
    }
}

/// Tests `E_rho ⊂ st`. The analytic side requires the semi-minor axis and
/// the vertex overshoot `semi_major - 1` to stay strictly below the radius.
pub fn ellipse_in_stadium(e: &BernsteinEllipse, st: &Stadium, samples: usize) -> InclusionCheck {
    let samples = samples.max(64);
    let max_distance = e.boundary(samples).map(distance_to_segment).fold(0.0, f64::max);
    let analytic = e.semi_minor() < st.radius && e.semi_major() - 1.0 < st.radius;
    InclusionCheck { sampled: max_distance <= st.radius, analytic, max_distance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn admissibility_examples() {
        let p = AdmissibleProfile::new(vec![0.1, 0.05], 0.25, 1.0).unwrap();
        assert!(is_admissible(&[2.0, 2.0], &p).unwrap());
        assert!(is_admissible(&[3.0, 2.0], &p).unwrap());
        let p1 = AdmissibleProfile::new(vec![1.0], 0.25, 1.0).unwrap();
        assert!(!is_admissible(&[1.5], &p1).unwrap());
        assert!(is_admissible(&[2.0], &p).unwrap(), "tail counts as rho = 1");
        assert!(matches!(is_admissible(&[1.0, 2.0], &p), Err(GeometryError::RhoNotAboveOne { index: 1, .. })));
        assert!(is_admissible(&[3.0, 3.0], &p).is_ok_and(|ok| !ok));
        assert!(is_admissible_with(&[3.0, 3.0], &p, Budget::Max).unwrap());
    }

    #[test]
    fn profile_validation() {
        assert!(AdmissibleProfile::new(vec![0.1, 0.2], 0.25, 1.0).is_err());
        assert!(AdmissibleProfile::new(vec![0.1], 0.0, 1.0).is_err());
        assert!(AdmissibleProfile::new(vec![0.1], 0.25, 1.5).is_err());
        assert!(AdmissibleProfile::new(vec![-0.1], 0.25, 1.0).is_err());
    }

    #[test]
    fn ellipse_membership() {
        let e = BernsteinEllipse::new(1.2).unwrap();
        assert!(e.contains(c(1.01, 0.0)));
        assert!(!e.contains(c(1.02, 0.0)));
        let e2 = BernsteinEllipse::new(2.0).unwrap();
        assert!(e2.contains(c(0.0, 0.75)));
        assert!(!e2.contains(c(0.0, 0.7501)));
        assert!(BernsteinEllipse::new(1.0).is_err());
    }

    #[test]
    fn stadium_membership() {
        let st = Stadium::new(0.3);
        assert!(st.contains(c(1.2, 0.0)));
        assert!(!st.contains(c(0.5, 0.31)));
        // clamp to -1, distance sqrt(0.04 + 0.04)
        assert!((st.distance(c(-1.2, -0.2)) - 0.08f64.sqrt()).abs() < 1e-15);
        assert!(st.contains(c(-1.2, -0.2)));
    }

    #[test]
    fn inclusion_examples() {
        let hit = ellipse_in_stadium(&BernsteinEllipse::new(1.25).unwrap(), &Stadium::new(0.25), 256);
        assert!(hit.included() && !hit.disagreement());
        let miss = ellipse_in_stadium(&BernsteinEllipse::new(1.6).unwrap(), &Stadium::new(0.25), 256);
        assert!((semi_major(1.6) - 1.0 - 0.1125).abs() < 1e-12);
        assert!((semi_minor(1.6) - 0.4875).abs() < 1e-12);
        assert!(!miss.included() && !miss.disagreement());
        let thin = ellipse_in_stadium(&BernsteinEllipse::new(1.0001).unwrap(), &Stadium::new(0.001), 64);
        assert!(thin.included());
    }

    #[test]
    fn axes_increase_with_rho() {
        let mut prev = (semi_minor(1.0 + 1e-6), semi_major(1.0 + 1e-6));
        for k in 1..2000 {
            let rho = 1.0 + 1e-6 + k as f64 * 0.005;
            let cur = (semi_minor(rho), semi_major(rho));
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    proptest! {
        #[test]
        fn boundary_lies_on_focal_level_set(rho in 1.0001f64..20.0, theta in 0.0f64..6.3) {
            let e = BernsteinEllipse::new(rho).unwrap();
            let z = e.boundary_point(theta);
            let focal = (z - 1.0).norm() + (z + 1.0).norm();
            prop_assert!((focal - (rho + 1.0 / rho)).abs() <= 1e-12 * (1.0 + rho));
        }

        #[test]
        fn shrinking_radii_stays_admissible(
            b in proptest::collection::vec(0.01f64..2.0, 1..8),
            shrink in proptest::collection::vec(0.0f64..1.0, 8),
            eps in 0.1f64..2.0,
        ) {
            let mut b = b;
            b.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let p = AdmissibleProfile::new(b.clone(), eps, 1.0).unwrap();
            // spend almost the whole budget evenly
            let rho: Vec<f64> = b.iter().map(|bj| 1.0 + 0.999 * eps / (b.len() as f64 * bj)).collect();
            prop_assert!(is_admissible(&rho, &p).unwrap());
            let smaller: Vec<f64> = rho.iter().zip(&shrink).map(|(r, t)| 1.0 + (r - 1.0) * t.max(1e-9)).collect();
            prop_assert!(is_admissible(&smaller, &p).unwrap());
        }
    }
}
