//! Mixed-derivative predictions and their validation, plus the geometric
//! admissibility diagnostics behind a certificate.

use serde::Serialize;

use super::{CertifyError, HoloCertificate};
use crate::calculus::{default_quadrature, deriv_mixed, ContourSpec, MultiIndex, THETA_SAFETY};
use crate::exec::Exec;
use crate::geometry::{ellipse_in_stadium, is_admissible, AdmissibleProfile, BernsteinEllipse, InclusionCheck};
use crate::pde::Problem;

/// Boundary points per ellipse in the inclusion check.
const INCLUSION_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub nu: MultiIndex,
    /// Worst `|∂^ν λ|` over the validation points.
    pub measured_lambda: Option<f64>,
    /// Worst `‖∂^ν u‖_{H¹₀}` over the validation points.
    pub measured_u: Option<f64>,
    /// `M_λ ν! Π (γ_j β_j / ε)^{ν_j}`.
    pub predicted_lambda: f64,
    /// `M_γ ν! Π (γ_j β_j / ε)^{ν_j}`.
    pub predicted_u: f64,
    /// Largest measured / predicted over both columns and all points.
    pub worst_ratio: Option<f64>,
    pub pass: Option<bool>,
    /// Measurement failures, by validation point.
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass == Some(true))
    }

    pub fn fail_count(&self) -> usize {
        self.rows.iter().filter(|r| r.pass != Some(true)).count()
    }
}

/// `ν! Π_j (γ_j β_j / ε)^{ν_j}`; `None` if `ν` reaches past the certificate.
fn bound_factor(cert: &HoloCertificate, nu: &MultiIndex) -> Option<f64> {
    let mut f = nu.factorial();
    for (j, n) in nu.entries() {
        f *= (cert.b.get(*j)? / cert.eps).powi(*n as i32);
    }
    Some(f)
}

/// Predicted columns only. Coordinates beyond the certificate give an
/// infinite prediction.
pub fn predict_mixed_bounds(cert: &HoloCertificate, nu_list: &[MultiIndex]) -> BoundReport {
    BoundReport {
        rows: nu_list
            .iter()
            .map(|nu| {
                let f = bound_factor(cert, nu).unwrap_or(f64::INFINITY);
                BoundRow {
                    nu: nu.clone(),
                    measured_lambda: None,
                    measured_u: None,
                    predicted_lambda: cert.m_lambda * f,
                    predicted_u: cert.m_gamma * f,
                    worst_ratio: None,
                    pass: None,
                    errors: Vec::new(),
                }
            })
            .collect(),
    }
}

/// Measures `∂^ν λ`, `‖∂^ν u‖` by nested contours at every `y` and compares
/// with the predictions. Contour radii are `THETA_SAFETY` of the stadium
/// radii. Measurement errors mark the row as failed without aborting.
pub fn validate_bounds(
    cert: &HoloCertificate,
    problem: &Problem,
    ys: &[Vec<f64>],
    nu_list: &[MultiIndex],
    exec: Exec,
) -> BoundReport {
    let mut report = predict_mixed_bounds(cert, nu_list);
    let jobs: Vec<(usize, usize)> = (0..nu_list.len()).flat_map(|i| (0..ys.len()).map(move |k| (i, k))).collect();
    let results = exec.map(&jobs, |&(i, k)| {
        let nu = &nu_list[i];
        let specs: Vec<ContourSpec> = nu
            .entries()
            .iter()
            .filter(|(j, _)| *j < cert.dimension())
            .map(|(j, _)| {
                ContourSpec::new(*j, THETA_SAFETY * cert.stadium_radius(*j), nu.order())
                    .with_quadrature(default_quadrature(nu.order()))
            })
            .collect();
        deriv_mixed(problem, &ys[k], nu, &specs, Exec::Sequential)
    });
    for ((i, k), res) in jobs.into_iter().zip(results) {
        let row = &mut report.rows[i];
        match res {
            Ok(e) => {
                let ml = e.d_lambda.norm();
                let mu = e.hnorm_du;
                row.measured_lambda = Some(row.measured_lambda.map_or(ml, |v| v.max(ml)));
                row.measured_u = Some(row.measured_u.map_or(mu, |v| v.max(mu)));
                let ratio = (ml / row.predicted_lambda).max(mu / row.predicted_u);
                row.worst_ratio = Some(row.worst_ratio.map_or(ratio, |v| v.max(ratio)));
            }
            Err(e) => row.errors.push(format!("y[{k}]: {e}")),
        }
    }
    for row in &mut report.rows {
        row.pass = Some(row.errors.is_empty() && row.worst_ratio.is_some_and(|r| r <= 1.0));
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateDiagnostic {
    pub j: usize,
    pub rho: f64,
    pub stadium_radius: f64,
    pub semi_minor: f64,
    /// `semi_major - 1`.
    pub vertex_excess: f64,
    pub inclusion: InclusionCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// `Σ γ_j β_j (ρ_j - 1)`.
    pub budget_used: f64,
    pub eps: f64,
    pub admissible: bool,
    pub coordinates: Vec<CoordinateDiagnostic>,
}

impl AdmissibilityReport {
    pub fn all_included(&self) -> bool {
        self.coordinates.iter().all(|c| c.inclusion.included())
    }

    pub fn passed(&self) -> bool {
        self.admissible && self.all_included()
    }
}

/// Checks `Σ b_j (ρ_j - 1) <= ε` and, per coordinate, `E_{ρ_j} ⊂ H_j`.
pub fn check_admissibility_theorem(cert: &HoloCertificate, rho: &[f64]) -> Result<AdmissibilityReport, CertifyError> {
    let profile = AdmissibleProfile::new(cert.b.clone(), cert.eps, cert.p)?;
    let admissible = is_admissible(rho, &profile)?;
    let budget_used = profile.budget_used(rho, Default::default())?;
    let coordinates = rho
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let e = BernsteinEllipse::new(*r)?;
            let st = profile.stadium(j);
            Ok(CoordinateDiagnostic {
                j,
                rho: *r,
                stadium_radius: st.radius,
                semi_minor: e.semi_minor(),
                vertex_excess: e.semi_major() - 1.0,
                inclusion: ellipse_in_stadium(&e, &st, INCLUSION_SAMPLES),
            })
        })
        .collect::<Result<Vec<_>, CertifyError>>()?;
    Ok(AdmissibilityReport { budget_used, eps: cert.eps, admissible, coordinates })
}
