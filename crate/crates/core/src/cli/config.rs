//! TOML run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::certify::CertifyOptions;
use crate::fields::{AffineField, ModeShape};
use crate::pde::{Mesh1D, Problem, ScfOptions, SolverOptions};
use crate::qmc::{Functional, SolveMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    #[default]
    Linear,
    Semilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub kind: KindName,
    pub n_cells: usize,
    /// Truncation dimension.
    pub s: usize,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub p: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldShape {
    #[default]
    Fourier,
    Bump,
    /// Spatially constant modes with explicit sizes `c`.
    Constant,
}

/// `base + Σ_j y_j phi_j`; Fourier and bump modes decay like
/// `amplitude · j^{-sigma}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub shape: FieldShape,
    #[serde(default)]
    pub c: Vec<f64>,
}

fn default_sigma() -> f64 {
    2.0
}

impl FieldSpec {
    pub fn constant(base: f64) -> Self {
        Self { base, amplitude: 0.0, sigma: default_sigma(), shape: FieldShape::Fourier, c: Vec::new() }
    }

    fn decay(base: f64, amplitude: f64) -> Self {
        Self { amplitude, ..Self::constant(base) }
    }

    fn validate(&self, name: &str) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(format!("field.{name}: {msg}")));
        if !self.base.is_finite() || !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad(format!("invalid base {} / amplitude {}", self.base, self.amplitude));
        }
        match self.shape {
            FieldShape::Constant if self.amplitude != 0.0 => bad("constant shape takes `c`, not `amplitude`".into()),
            FieldShape::Constant => Ok(()),
            _ if !self.c.is_empty() => bad("`c` is only used with shape = \"constant\"".into()),
            _ if !(self.sigma > 1.0) => bad(format!("sigma = {} must exceed 1", self.sigma)),
            _ => Ok(()),
        }
    }

    pub fn build(&self, s: usize) -> AffineField {
        match self.shape {
            FieldShape::Constant => {
                let c: Vec<f64> = self.c.iter().take(s).copied().collect();
                AffineField::constant_modes(self.base, &c)
            }
            _ if self.amplitude == 0.0 => AffineField::constant(self.base),
            FieldShape::Fourier => AffineField::decay(self.base, self.amplitude, self.sigma, s, ModeShape::Fourier),
            FieldShape::Bump => AffineField::decay(self.base, self.amplitude, self.sigma, s, ModeShape::Bump),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    #[serde(rename = "A", default = "default_a")]
    pub a: FieldSpec,
    #[serde(rename = "B", default = "default_b")]
    pub b: FieldSpec,
    #[serde(rename = "C", default = "default_c")]
    pub c: FieldSpec,
}

fn default_a() -> FieldSpec {
    FieldSpec::decay(1.0, 0.2)
}

fn default_b() -> FieldSpec {
    FieldSpec::decay(1.0, 0.2)
}

fn default_c() -> FieldSpec {
    FieldSpec::decay(1.0, 0.1)
}

impl Default for FieldsConfig {
    fn default() -> Self {
        Self { a: default_a(), b: default_b(), c: default_c() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalName {
    #[default]
    Lambda,
    /// `∫ u`, i.e. `G(u) = 1ᵀ M u`.
    IntegralU,
}

/// CBC weight source.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum WeightSpec {
    /// `(γ_j β_j)²` from a freshly built certificate.
    #[default]
    Certificate,
    /// `c_j²` from the field amplitudes.
    Amplitudes,
    Explicit {
        w: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QmcConfig {
    pub n_list: Vec<u64>,
    pub r: usize,
    pub functional: FunctionalName,
    pub weights: WeightSpec,
    pub mode: SolveMode,
}

impl Default for QmcConfig {
    fn default() -> Self {
        Self {
            n_list: vec![251, 503, 1009, 2003],
            r: 16,
            functional: FunctionalName::Lambda,
            weights: WeightSpec::Certificate,
            mode: SolveMode::Cold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub field: FieldsConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub scf: ScfOptions,
    #[serde(default)]
    pub certify: CertifyOptions,
    #[serde(default)]
    pub qmc: QmcConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        if p.n_cells < 2 {
            return Err(CliError::Config(format!("n_cells = {} must be at least 2", p.n_cells)));
        }
        if p.s == 0 {
            return Err(CliError::Config("s must be positive".into()));
        }
        if p.kind == KindName::Linear && (p.eta.is_some() || p.p.is_some()) {
            return Err(CliError::Config("eta and p apply to semilinear problems only".into()));
        }
        for (name, f) in [("A", &self.field.a), ("B", &self.field.b), ("C", &self.field.c)] {
            f.validate(name)?;
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err(CliError::Config("solver tol and max_iters must be positive".into()));
        }
        if self.qmc.r < crate::qmc::lattice::MIN_SHIFTS {
            return Err(CliError::Config(format!("qmc.r = {} below 8", self.qmc.r)));
        }
        Ok(())
    }

    /// The configured problem; assumption failures surface as numerical errors.
    pub fn build_problem(&self) -> Result<Problem, CliError> {
        let p = &self.problem;
        let mesh = Mesh1D::uniform(p.n_cells).map_err(|e| CliError::Config(e.to_string()))?;
        let (a, b) = (self.field.a.build(p.s), self.field.b.build(p.s));
        let problem = match p.kind {
            KindName::Linear => Problem::linear(mesh, a, b, self.field.c.build(p.s)),
            KindName::Semilinear => Problem::semilinear(mesh, a, b, p.eta.unwrap_or(1.0), p.p.unwrap_or(3)),
        }?;
        Ok(problem.with_solver(self.solver).with_scf(self.scf))
    }

    pub fn functional(&self, problem: &Problem) -> Functional {
        match self.qmc.functional {
            FunctionalName::Lambda => Functional::Lambda,
            FunctionalName::IntegralU => Functional::Gu { g: vec![1.0; problem.mesh().dofs()] },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let cfg = RunConfig::from_toml("[problem]\nn_cells = 32\ns = 4\n").unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.qmc.r, 16);
        let problem = cfg.build_problem().unwrap();
        let reference = Problem::standard_fourier(32, 4).unwrap();
        let y = [0.3, -0.2, 0.1, 0.4];
        let a = problem.solve_real(&y, None).unwrap().lambda;
        let b = reference.solve_real(&y, None).unwrap().lambda;
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::from_toml("[problem]\nn_cells = 32\ns = 4\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml("colour = 1\n[problem]\nn_cells = 32\ns = 4\n").is_err());
        assert!(RunConfig::from_toml("[problem]\nn_cells = 32\ns = 0\n").is_err());
        let sigma = "[problem]\nn_cells = 32\ns = 4\n[field.A]\nbase = 1.0\namplitude = 0.1\nsigma = 0.5\n";
        assert!(matches!(RunConfig::from_toml(sigma), Err(CliError::Config(_))));
    }

    #[test]
    fn lower_bound_violation_is_numerical() {
        let text = "[problem]\nn_cells = 16\ns = 1\n[field.A]\nbase = 0.2\nshape = \"constant\"\nc = [0.5]\n";
        let err = RunConfig::from_toml(text).unwrap().build_problem().unwrap_err();
        assert!(matches!(err, CliError::Numerical(_)), "{err:?}");
        assert!(err.to_string().contains("lower bound"));
    }
}
