//! `(b, ε)`-holomorphy certificates.
//!
//! A certificate records the α-rule and its ε, the weights `β = ζ c` with
//! `ζ` fitted from measured single-coordinate derivatives, a `γ` sequence
//! normalised to a target `Γ = Σ 1/γ_j`, and the sampled suprema `M_γ`
//! (over the stadiums `H_γ`) that enter the mixed-derivative predictions.
//!
//! Everything here is measured, not proved. In particular the certificate
//! assumes, without checking, that the continued ground pair is jointly
//! continuous on `H_γ`; only separate continuation along sampled paths is
//! exercised.

mod bounds;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{deriv_contour, CalculusError, ContourSpec, THETA_SAFETY};
use crate::combinatorics::{alpha_f64, AlphaRule};
use crate::exec::Exec;
use crate::geometry::GeometryError;
use crate::pde::{assemble, second_eigenvalue, GroundPair, Problem, ProblemKind, SolverError};

pub use bounds::{
    check_admissibility_theorem, predict_mixed_bounds, validate_bounds, AdmissibilityReport, BoundReport, BoundRow,
    CoordinateDiagnostic,
};

/// Candidate ℓ^p exponents, smallest first.
pub const P_CANDIDATES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Budget on `Σ b_j^p` used to pick `p`.
pub const P_BUDGET: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("continuation failed while sampling H_γ in coordinate {coord} (stadium radius {radius:.4e}): {source}")]
    Sampling {
        coord: usize,
        radius: f64,
        #[source]
        source: SolverError,
    },
    #[error("derivative fit failed in coordinate {coord}: {source}")]
    Fit {
        coord: usize,
        #[source]
        source: CalculusError,
    },
    #[error("solve failed at a real sample: {0}")]
    Solve(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Shape of `γ` before normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaPolicy {
    /// `κ_j = r^j`.
    Geometric { r: f64 },
    /// `κ_j = j^{σ_g}`.
    Power { sigma_g: f64 },
}

impl GammaPolicy {
    /// Unnormalised `κ_j` for the 1-based index `j`.
    pub fn raw(&self, j: usize) -> f64 {
        match *self {
            GammaPolicy::Geometric { r } => r.powi(j as i32),
            GammaPolicy::Power { sigma_g } => (j as f64).powf(sigma_g),
        }
    }

    /// `γ_j = κ_j (Σ_k 1/κ_k) / target`, so that `Σ_{j<s} 1/γ_j = target`.
    pub fn gammas(&self, s: usize, target: f64) -> Result<Vec<f64>, CertifyError> {
        let valid = match *self {
            GammaPolicy::Geometric { r } => r > 1.0 && r.is_finite(),
            GammaPolicy::Power { sigma_g } => sigma_g > 0.0 && sigma_g.is_finite(),
        };
        if !valid {
            return Err(CertifyError::Assumption(format!("invalid gamma policy {self:?}")));
        }
        if !(target > 0.0 && target.is_finite()) {
            return Err(CertifyError::Assumption(format!("target Γ = {target} must be positive")));
        }
        let kappa: Vec<f64> = (1..=s).map(|j| self.raw(j)).collect();
        let norm: f64 = kappa.iter().map(|k| 1.0 / k).sum::<f64>() / target;
        Ok(kappa.iter().map(|k| k * norm).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyOptions {
    pub policy: GammaPolicy,
    /// Stadium samples per coordinate for `M_γ`.
    pub sample_budget: usize,
    /// Random real points in the derivative fit (on top of `0` and `±1`).
    pub fit_points: usize,
    /// Highest derivative order in the fit; defaults to 4 (linear) or 2 (semilinear).
    pub fit_order: Option<u32>,
    /// Coordinates entering the fit.
    pub j_max: usize,
    pub margin: f64,
    /// Target `Γ` as a fraction of the rule's cap.
    pub gamma_fraction: f64,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            policy: GammaPolicy::Power { sigma_g: 1.1 },
            sample_budget: 200,
            fit_points: 4,
            fit_order: None,
            j_max: 8,
            margin: 1.1,
            gamma_fraction: 0.9,
            seed: 0,
        }
    }
}

/// Where the fitted constant came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    /// Smallest admissible constant before the margin.
    pub raw: f64,
    pub margin: f64,
    pub order: u32,
    pub j_max: usize,
    pub points: usize,
    /// `(j, n, quantity)` attaining the raw constant, if it exceeded 1.
    pub argmax: Option<(usize, u32, String)>,
    pub method: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoloCertificate {
    pub rule: AlphaRule,
    pub eps: f64,
    /// Mode sizes `c_j`.
    pub c: Vec<f64>,
    /// `ζ c_j` (linear) or `ρ ‖B_j‖` (semilinear).
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `γ_j β_j`.
    pub b: Vec<f64>,
    /// Smallest candidate `p` with `Σ b_j^p` below [`P_BUDGET`].
    pub p: f64,
    pub power_sum: f64,
    #[serde(rename = "Gamma")]
    pub gamma_sum: f64,
    pub gamma_cap: f64,
    /// `sup ‖u(z)‖_{H¹₀}` over sampled `H_γ`.
    #[serde(rename = "M_gamma")]
    pub m_gamma: f64,
    /// `sup |λ(z)|` over sampled `H_γ`.
    pub m_lambda: f64,
    pub lambda_bar: f64,
    pub u_bar: f64,
    pub d_low: f64,
    /// Discrete `λ₂ - λ₁` at `y = 0` for linear problems: a measured stand-in
    /// for the spectral-gap constant, which has no formula here.
    pub spectral_gap: Option<f64>,
    pub fit: FitMetadata,
    pub sample_budget: usize,
    pub seed: u64,
    pub policy: GammaPolicy,
}

impl HoloCertificate {
    pub fn dimension(&self) -> usize {
        self.b.len()
    }

    /// Stadium radius `ε / (γ_j β_j)`.
    pub fn stadium_radius(&self, j: usize) -> f64 {
        self.eps / self.b[j]
    }

    /// Contour for coordinate `j` at `THETA_SAFETY` of the stadium radius.
    pub fn contour(&self, j: usize, n_max: u32) -> ContourSpec {
        ContourSpec::from_stadium(j, self.stadium_radius(j), n_max)
    }

    /// Copy with `β` (and `b`) multiplied by `factor`; `M_γ` is kept.
    pub fn with_beta_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.beta.iter_mut().for_each(|b| *b *= factor);
        out.b = out.gamma.iter().zip(&out.beta).map(|(g, b)| g * b).collect();
        out
    }

    /// `Γ` below the rule's cap.
    pub fn gamma_ok(&self) -> bool {
        self.gamma_sum < self.gamma_cap
    }
}

/// Cap on `Γ`: `min(1, 4 D̲)` for the linear rule, `1` for the semilinear.
pub fn gamma_cap(problem: &Problem) -> f64 {
    match problem.kind() {
        ProblemKind::Linear => (4.0 * problem.assumptions().d_low).min(1.0),
        ProblemKind::Semilinear { .. } => 1.0,
    }
}

fn smallest_p(b: &[f64]) -> (f64, f64) {
    for p in P_CANDIDATES {
        let sum: f64 = b.iter().map(|v| v.powf(p)).sum();
        if sum < P_BUDGET {
            return (p, sum);
        }
    }
    (1.0, b.iter().sum())
}

struct Running {
    lambda: f64,
    u: f64,
}

impl Running {
    fn merge(self, other: Running) -> Running {
        Running { lambda: self.lambda.max(other.lambda), u: self.u.max(other.u) }
    }
}

fn real_point(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
    (0..s).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// `count` seeded points uniform on `[-1, 1]^s` for bound validation.
pub fn validation_points(s: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| real_point(&mut rng, s)).collect()
}

/// Builds the certificate for `problem` on its full truncation dimension.
pub fn build_certificate(
    problem: &Problem,
    opts: &CertifyOptions,
    exec: Exec,
) -> Result<HoloCertificate, CertifyError> {
    let s = problem.dimension();
    if s == 0 {
        return Err(CertifyError::Assumption("problem has no parameters".into()));
    }
    if !(opts.margin >= 1.0) || !(opts.gamma_fraction > 0.0 && opts.gamma_fraction < 1.0) {
        return Err(CertifyError::Assumption("margin must be >= 1 and gamma_fraction in (0, 1)".into()));
    }
    let rule = problem.rule();
    let eps = rule.eps();
    let c = problem.amplitudes();
    if let Some(j) = c.iter().position(|v| !(*v > 0.0)) {
        return Err(CertifyError::Assumption(format!(
            "mode size c_{j} = {} is not positive; truncate the problem before certifying",
            c[j]
        )));
    }
    let cap = gamma_cap(problem);
    let gamma = opts.policy.gammas(s, opts.gamma_fraction * cap)?;
    let gamma_sum: f64 = gamma.iter().map(|g| 1.0 / g).sum();
    if !(gamma_sum < cap) || gamma.iter().any(|g| !(*g > 1.0)) {
        return Err(CertifyError::Assumption(format!(
            "Γ = {gamma_sum:.6} must stay below the cap {cap:.6} with every γ_j > 1"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut fit_set = vec![vec![0.0; s], vec![1.0; s], vec![-1.0; s]];
    fit_set.extend((0..opts.fit_points).map(|_| real_point(&mut rng, s)));
    let real_pairs = exec.try_map(&fit_set, |y| problem.solve_real(y, None))?;
    let mut bars = real_pairs
        .iter()
        .map(|p| Running { lambda: p.lambda.norm(), u: problem.hnorm(&p.u) })
        .fold(Running { lambda: 0.0, u: 0.0 }, Running::merge);

    let order = opts.fit_order.unwrap_or(match problem.kind() {
        ProblemKind::Linear => 4,
        ProblemKind::Semilinear { .. } => 2,
    });
    let j_fit = s.min(opts.j_max.max(1));
    let jobs: Vec<(usize, usize)> = (0..fit_set.len()).flat_map(|k| (0..j_fit).map(move |j| (k, j))).collect();
    let measured = exec.try_map(&jobs, |&(k, j)| {
        let mut radius = THETA_SAFETY * eps / (gamma[j] * c[j]);
        let mut last = None;
        for _ in 0..5 {
            let spec = ContourSpec::new(j, radius, order);
            match deriv_contour(problem, &fit_set[k], &spec, order) {
                Ok(res) => return Ok((j, res.entries)),
                Err(e) => {
                    last = Some(e);
                    radius *= 0.5;
                }
            }
        }
        Err(CertifyError::Fit { coord: j, source: last.expect("loop ran") })
    })?;
    let mut raw = 1.0f64;
    let mut argmax = None;
    for (j, entries) in &measured {
        for e in entries.iter().skip(1) {
            let n = e.nu.order();
            let scale = alpha_f64(n, rule) * c[*j].powi(n as i32);
            for (what, value, bar) in [("lambda", e.d_lambda.norm(), bars.lambda), ("u", e.hnorm_du, bars.u)] {
                let zeta = (value / (bar * scale)).powf(1.0 / n as f64);
                if zeta > raw {
                    raw = zeta;
                    argmax = Some((*j, n, what.to_string()));
                }
            }
        }
    }
    let zeta = opts.margin * raw;
    let beta: Vec<f64> = c.iter().map(|cj| zeta * cj).collect();
    let b: Vec<f64> = gamma.iter().zip(&beta).map(|(g, bt)| g * bt).collect();
    if let Some(j) = b.windows(2).position(|w| w[1] > w[0] * (1.0 + 1e-12)) {
        return Err(CertifyError::Assumption(format!(
            "b = γβ is not non-increasing at j = {}: {:.4e} < {:.4e}; use a slower-growing γ policy",
            j + 1,
            b[j],
            b[j + 1]
        )));
    }
    let (p, power_sum) = smallest_p(&b);

    // H_γ sampling: one complex coordinate at a time, the rest real.
    let mut samples = Vec::with_capacity(s * opts.sample_budget);
    for (j, bj) in b.iter().enumerate() {
        let radius = eps / bj;
        for _ in 0..opts.sample_budget {
            let y = real_point(&mut rng, s);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            samples.push((j, radius, y, Complex64::from_polar(radius, phi)));
        }
    }
    let sampled = exec.try_map(&samples, |(j, radius, y, offset)| {
        sample_stadium_point(problem, y, *j, *offset).map_err(|source| CertifyError::Sampling {
            coord: *j,
            radius: *radius,
            source,
        })
    })?;
    let mut sup = Running { lambda: bars.lambda, u: bars.u };
    for (real, complex) in sampled {
        bars = bars.merge(Running { lambda: real.0, u: real.1 });
        sup = sup.merge(Running { lambda: complex.0, u: complex.1 });
    }
    let sup = sup.merge(Running { lambda: bars.lambda, u: bars.u });
    let spectral_gap = match problem.kind() {
        ProblemKind::Linear => {
            let [a, b, cc] = problem.coefficients(&vec![Complex64::default(); s]);
            let (k, m) = assemble(problem.mesh(), &a, &b, &cc)?;
            Some(second_eigenvalue(&k, &m, &real_pairs[0], &problem.solver)? - real_pairs[0].lambda.re)
        }
        ProblemKind::Semilinear { .. } => None,
    };

    Ok(HoloCertificate {
        rule,
        eps,
        c,
        beta,
        gamma,
        b,
        p,
        power_sum,
        gamma_sum,
        gamma_cap: cap,
        m_gamma: sup.u,
        m_lambda: sup.lambda,
        lambda_bar: bars.lambda,
        u_bar: bars.u,
        d_low: problem.assumptions().d_low,
        spectral_gap,
        fit: FitMetadata {
            raw,
            margin: opts.margin,
            order,
            j_max: j_fit,
            points: fit_set.len(),
            argmax,
            method: "contour".into(),
        },
        sample_budget: opts.sample_budget,
        seed: opts.seed,
        policy: opts.policy,
    })
}

/// `(|λ|, ‖u‖)`.
type Magnitudes = (f64, f64);

/// Magnitudes at the real point `y` and at `y + offset e_j`, reached by a
/// straight continuation path.
fn sample_stadium_point(
    problem: &Problem,
    y: &[f64],
    j: usize,
    offset: Complex64,
) -> Result<(Magnitudes, Magnitudes), SolverError> {
    let base = problem.solve_real(y, None)?;
    let steps = ((offset.norm() / 0.05).ceil() as usize).clamp(1, 64);
    let mut z: Vec<Complex64> = y.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let mut current: GroundPair = base.clone();
    for k in 1..=steps {
        z[j] = Complex64::new(y[j], 0.0) + offset * (k as f64 / steps as f64);
        current = problem.solve(&z, Some(&current))?;
    }
    Ok(((base.lambda.norm(), problem.hnorm(&base.u)), (current.lambda.norm(), problem.hnorm(&current.u))))
}
