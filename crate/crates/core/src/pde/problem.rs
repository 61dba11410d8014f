//! Parametric eigenvalue problems: coefficient fields, mesh and solver
//! settings bundled behind a single `solve(y)` entry point.

use num_complex::Complex64;

use super::assembly::{assemble, unit_mass, unit_stiffness};
use super::eigen::{ground_pair_linear, GroundPair, SolverOptions};
use super::mesh::Mesh1D;
use super::semilinear::{ground_pair_semilinear, ScfOptions, ALLOWED_POWERS};
use super::sparse::SparseSym;
use super::SolverError;
use crate::combinatorics::AlphaRule;
use crate::fields::{
    componentwise_max, lower_bound, make_decay_field, verify_assumptions, AffineField, FieldAssumptions, FieldError,
    ModeShape,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// `-(A u')' + B u = λ C u`.
    Linear,
    /// `-(A u')' + B u + η u^p = λ u` with non-parametric `A`.
    Semilinear { eta: f64, p: u32 },
}

/// Field values tabulated at cell midpoints.
#[derive(Debug, Clone)]
struct Tabulated {
    phi0: Vec<f64>,
    modes: Vec<Vec<f64>>,
}

impl Tabulated {
    fn new(f: &AffineField, mids: &[f64]) -> Self {
        Self {
            phi0: mids.iter().map(|x| f.phi0().eval(*x)).collect(),
            modes: f.modes().iter().map(|m| mids.iter().map(|x| m.eval(*x)).collect()).collect(),
        }
    }

    fn eval(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.phi0.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        for (yj, mode) in y.iter().zip(&self.modes) {
            if *yj == Complex64::default() {
                continue;
            }
            out.iter_mut().zip(mode).for_each(|(o, m)| *o += yj * m);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    mesh: Mesh1D,
    a: AffineField,
    b: AffineField,
    c: AffineField,
    kind: ProblemKind,
    pub solver: SolverOptions,
    pub scf: ScfOptions,
    tab: [Tabulated; 3],
    k0: SparseSym,
    m1: SparseSym,
    assumptions: FieldAssumptions,
}

impl Problem {
    /// Linear problem; checks uniform positivity of `A` and `C` over the cube.
    pub fn linear(mesh: Mesh1D, a: AffineField, b: AffineField, c: AffineField) -> Result<Self, FieldError> {
        let assumptions = verify_assumptions(&a, &b, &c, mesh.nodes())?;
        Ok(Self::build(mesh, a, b, c, ProblemKind::Linear, assumptions))
    }

    /// Semilinear problem. `A` must be non-parametric and uniformly positive.
    pub fn semilinear(mesh: Mesh1D, a: AffineField, b: AffineField, eta: f64, p: u32) -> Result<Self, FieldError> {
        if a.is_parametric() {
            return Err(FieldError::Config("semilinear problems take a non-parametric A".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(FieldError::Config(format!("eta = {eta} must be non-negative")));
        }
        if !ALLOWED_POWERS.contains(&p) {
            return Err(FieldError::Config(format!("p = {p} not in {ALLOWED_POWERS:?}")));
        }
        let c = AffineField::constant(1.0);
        let mut assumptions = verify_assumptions(&a, &b, &c, mesh.nodes())?;
        lower_bound(&a, "A", mesh.nodes())?;
        assumptions.c = b.amplitudes().to_vec();
        Ok(Self::build(mesh, a, b, c, ProblemKind::Semilinear { eta, p }, assumptions))
    }

    fn build(
        mesh: Mesh1D,
        a: AffineField,
        b: AffineField,
        c: AffineField,
        kind: ProblemKind,
        assumptions: FieldAssumptions,
    ) -> Self {
        let mids = mesh.midpoints();
        let tab = [Tabulated::new(&a, &mids), Tabulated::new(&b, &mids), Tabulated::new(&c, &mids)];
        let k0 = unit_stiffness(&mesh);
        let m1 = unit_mass(&mesh);
        Self {
            mesh,
            a,
            b,
            c,
            kind,
            solver: SolverOptions::default(),
            scf: ScfOptions::default(),
            tab,
            k0,
            m1,
            assumptions,
        }
    }

    /// Reference linear problem: Fourier-mode `A`, `B`, `C` with `j^{-2}`
    /// decay on `s` coordinates.
    pub fn standard_fourier(n_cells: usize, s: usize) -> Result<Self, FieldError> {
        let mesh = Mesh1D::uniform(n_cells).map_err(|e| FieldError::Config(e.to_string()))?;
        let a = make_decay_field(1.0, 0.2, 2.0, s, ModeShape::Fourier)?;
        let b = make_decay_field(1.0, 0.2, 2.0, s, ModeShape::Fourier)?;
        let c = make_decay_field(1.0, 0.1, 2.0, s, ModeShape::Fourier)?;
        Self::linear(mesh, a, b, c)
    }

    /// `A ≡ 1`, `C ≡ 1`, `B(y) = Σ c_j y_j`: the eigenvalue is affine in `y`,
    /// `λ(y) = π²_h + Σ c_j y_j`, and the eigenvector does not move.
    pub fn constant_mode_b(n_cells: usize, c: &[f64]) -> Result<Self, FieldError> {
        let mesh = Mesh1D::uniform(n_cells).map_err(|e| FieldError::Config(e.to_string()))?;
        let b = AffineField::constant_modes(0.0, c);
        Self::linear(mesh, AffineField::constant(1.0), b, AffineField::constant(1.0))
    }

    /// `A(y) = 1 + Σ a_j y_j`, `B ≡ 0`, `C ≡ 1`: `λ(y) = λ_h (1 + Σ a_j y_j)`.
    pub fn constant_mode_a(n_cells: usize, a: &[f64]) -> Result<Self, FieldError> {
        let mesh = Mesh1D::uniform(n_cells).map_err(|e| FieldError::Config(e.to_string()))?;
        let a = AffineField::constant_modes(1.0, a);
        Self::linear(mesh, a, AffineField::constant(0.0), AffineField::constant(1.0))
    }

    /// `A ≡ 1`, `B ≡ 0`, `C(y) = 1 + Σ c_j y_j`: `λ(y) = λ_h / (1 + Σ c_j y_j)`.
    pub fn constant_mode_c(n_cells: usize, c: &[f64]) -> Result<Self, FieldError> {
        let mesh = Mesh1D::uniform(n_cells).map_err(|e| FieldError::Config(e.to_string()))?;
        let c = AffineField::constant_modes(1.0, c);
        Self::linear(mesh, AffineField::constant(1.0), AffineField::constant(0.0), c)
    }

    pub fn with_solver(mut self, solver: SolverOptions) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_scf(mut self, scf: ScfOptions) -> Self {
        self.scf = scf;
        self
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn fields(&self) -> (&AffineField, &AffineField, &AffineField) {
        (&self.a, &self.b, &self.c)
    }

    pub fn assumptions(&self) -> &FieldAssumptions {
        &self.assumptions
    }

    pub fn rule(&self) -> AlphaRule {
        match self.kind {
            ProblemKind::Linear => AlphaRule::QuadrupleFactorial,
            ProblemKind::Semilinear { .. } => AlphaRule::Factorial,
        }
    }

    /// Truncation dimension `s`.
    pub fn dimension(&self) -> usize {
        self.a.dimension().max(self.b.dimension()).max(self.c.dimension())
    }

    /// Mode sizes `c_j`: `max(‖A_j‖, ‖B_j‖, ‖C_j‖)` (linear) or `‖B_j‖` (semilinear).
    pub fn amplitudes(&self) -> Vec<f64> {
        match self.kind {
            ProblemKind::Linear => componentwise_max(&[self.a.amplitudes(), self.b.amplitudes(), self.c.amplitudes()]),
            ProblemKind::Semilinear { .. } => {
                let mut c = self.b.amplitudes().to_vec();
                c.resize(self.dimension(), 0.0);
                c
            }
        }
    }

    /// Same problem restricted to the first `s` parameters.
    pub fn truncated(&self, s: usize) -> Self {
        let mut out = Self::build(
            self.mesh.clone(),
            self.a.truncated(s),
            self.b.truncated(s),
            self.c.truncated(s),
            self.kind,
            self.assumptions.clone(),
        );
        out.assumptions.c.truncate(s);
        out.solver = self.solver;
        out.scf = self.scf;
        out
    }

    /// Unit-coefficient stiffness (`H¹₀` seminorm).
    pub fn unit_stiffness(&self) -> &SparseSym {
        &self.k0
    }

    pub fn unit_mass(&self) -> &SparseSym {
        &self.m1
    }

    /// Midpoint values of `(A, B, C)` at `y`.
    pub fn coefficients(&self, y: &[Complex64]) -> [Vec<Complex64>; 3] {
        [self.tab[0].eval(y), self.tab[1].eval(y), self.tab[2].eval(y)]
    }

    fn check_ellipticity(&self, a: &[Complex64], c: &[Complex64]) -> Result<(), SolverError> {
        let mids = self.mesh.midpoints();
        for (name, vals) in [("A", a), ("C", c)] {
            if let Some(e) = vals.iter().position(|v| !(v.re > 0.0)) {
                return Err(SolverError::Degenerate { field: name, x: mids[e], value: vals[e].re });
            }
        }
        Ok(())
    }

    /// Ground pair at a complex parameter, continuing `seed` when given.
    pub fn solve(&self, y: &[Complex64], seed: Option<&GroundPair>) -> Result<GroundPair, SolverError> {
        if y.len() > self.dimension() {
            return Err(SolverError::Domain(format!(
                "{} parameters given, problem has s = {}",
                y.len(),
                self.dimension()
            )));
        }
        let [a, b, c] = self.coefficients(y);
        self.check_ellipticity(&a, &c)?;
        match self.kind {
            ProblemKind::Linear => {
                let (k, m) = assemble(&self.mesh, &a, &b, &c)?;
                ground_pair_linear(&k, &m, seed, &self.solver)
            }
            ProblemKind::Semilinear { eta, p } => {
                ground_pair_semilinear(&self.mesh, &a, &b, eta, p, seed, &self.solver, &self.scf)
            }
        }
    }

    pub fn solve_real(&self, y: &[f64], seed: Option<&GroundPair>) -> Result<GroundPair, SolverError> {
        let z: Vec<Complex64> = y.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.solve(&z, seed)
    }

    /// `‖u‖_{H¹₀}`.
    pub fn hnorm(&self, u: &[Complex64]) -> f64 {
        self.k0.hermitian_form(u).re.max(0.0).sqrt()
    }

    /// `gᵀ (M u)` with the unit mass matrix.
    pub fn functional(&self, g: &[f64], u: &[Complex64]) -> Complex64 {
        self.m1.matvec(u).iter().zip(g).map(|(mu, gi)| mu * gi).sum()
    }
}
