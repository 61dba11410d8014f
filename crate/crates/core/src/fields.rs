//! Affine parametric coefficients `phi(x, y) = phi_0(x) + Σ_j y_j phi_j(x)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(
        "assumption violated: lower bound of {field} is {value:.6e} <= 0 at x = {x:.6} \
         (coefficient must stay uniformly positive over the parameter cube)"
    )]
    LowerBound { field: &'static str, value: f64, x: f64 },
    #[error("parameter vector has {got} entries but the field is truncated at s = {s}")]
    TooManyParameters { got: usize, s: usize },
}

/// A real function on `[0, 1]`.
#[derive(Clone)]
pub enum SpatialFn {
    Constant(f64),
    /// `scale * sin(k pi x)`.
    Sine {
        k: u32,
        scale: f64,
    },
    /// `scale * max(0, 1 - |x - center| / half_width)`.
    Hat {
        center: f64,
        half_width: f64,
        scale: f64,
    },
    Custom {
        label: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl SpatialFn {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SpatialFn::Custom { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpatialFn::Constant(c) => *c,
            SpatialFn::Sine { k, scale } => scale * (f64::from(*k) * std::f64::consts::PI * x).sin(),
            SpatialFn::Hat { center, half_width, scale } => scale * (1.0 - (x - center).abs() / half_width).max(0.0),
            SpatialFn::Custom { f, .. } => f(x),
        }
    }

    /// Exact sup-norm where it is known in closed form.
    fn analytic_sup(&self) -> Option<f64> {
        match self {
            SpatialFn::Constant(c) => Some(c.abs()),
            SpatialFn::Sine { scale, .. } | SpatialFn::Hat { scale, .. } => Some(scale.abs()),
            SpatialFn::Custom { .. } => None,
        }
    }
}

impl fmt::Debug for SpatialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpatialFn::Constant(c) => write!(f, "Constant({c})"),
            SpatialFn::Sine { k, scale } => write!(f, "{scale}*sin({k}πx)"),
            SpatialFn::Hat { center, half_width, scale } => {
                write!(f, "{scale}*hat({center}±{half_width})")
            }
            SpatialFn::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeShape {
    Fourier,
    Bump,
}

/// `phi_0 + Σ_{j<=s} y_j phi_j` with cached amplitudes `c_j = ‖phi_j‖_∞`.
#[derive(Debug, Clone)]
pub struct AffineField {
    phi0: SpatialFn,
    modes: Vec<SpatialFn>,
    amplitudes: Vec<f64>,
}

/// Uniform sampling grid (nodes and cell midpoints) used for sup-norms.
fn sampling_grid() -> impl Iterator<Item = f64> {
    const CELLS: usize = 2048;
    (0..=2 * CELLS).map(|k| k as f64 / (2 * CELLS) as f64)
}

impl AffineField {
    /// Builds a field from arbitrary spatial functions. Amplitudes are exact
    /// for the closed-form shapes and sampled on a fine grid otherwise.
    pub fn new(phi0: SpatialFn, modes: Vec<SpatialFn>) -> Self {
        let amplitudes =
            modes.iter().map(|m| m.analytic_sup().unwrap_or_else(|| sampled_sup(m, sampling_grid()))).collect();
        Self { phi0, modes, amplitudes }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(SpatialFn::Constant(value), Vec::new())
    }

    /// `phi_j ≡ c_j` for each given constant.
    pub fn constant_modes(base: f64, c: &[f64]) -> Self {
        Self::new(SpatialFn::Constant(base), c.iter().map(|v| SpatialFn::Constant(*v)).collect())
    }

    /// Decay family without the positivity check (for potentials).
    pub fn decay(base: f64, amplitude: f64, sigma: f64, s: usize, shape: ModeShape) -> Self {
        if amplitude == 0.0 {
            return Self::constant(base);
        }
        let modes = (1..=s)
            .map(|j| {
                let scale = amplitude * (j as f64).powf(-sigma);
                match shape {
                    ModeShape::Fourier => SpatialFn::Sine { k: j as u32, scale },
                    ModeShape::Bump => {
                        let half_width = 0.5 / s as f64;
                        SpatialFn::Hat { center: (j as f64 - 0.5) / s as f64, half_width, scale }
                    }
                }
            })
            .collect();
        Self::new(SpatialFn::Constant(base), modes)
    }

    pub fn phi0(&self) -> &SpatialFn {
        &self.phi0
    }

    pub fn modes(&self) -> &[SpatialFn] {
        &self.modes
    }

    /// `c_j = ‖phi_j‖_∞`.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Truncation dimension `s`.
    pub fn dimension(&self) -> usize {
        self.modes.len()
    }

    pub fn is_parametric(&self) -> bool {
        !self.modes.is_empty()
    }

    /// Keeps the first `s` modes.
    pub fn truncated(&self, s: usize) -> Self {
        let s = s.min(self.modes.len());
        Self { phi0: self.phi0.clone(), modes: self.modes[..s].to_vec(), amplitudes: self.amplitudes[..s].to_vec() }
    }

    /// Multiplies every mode (not `phi_0`) by `t`.
    pub fn scaled_modes(&self, t: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                let m = m.clone();
                SpatialFn::custom(format!("{t}*{m:?}"), move |x| t * m.eval(x))
            })
            .collect();
        Self { phi0: self.phi0.clone(), modes, amplitudes: self.amplitudes.iter().map(|c| c * t.abs()).collect() }
    }

    /// Multiplies the whole field by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        let scale = |f: &SpatialFn| {
            let f = f.clone();
            SpatialFn::custom(format!("{t}*{f:?}"), move |x| t * f.eval(x))
        };
        Self {
            phi0: scale(&self.phi0),
            modes: self.modes.iter().map(scale).collect(),
            amplitudes: self.amplitudes.iter().map(|c| c * t.abs()).collect(),
        }
    }

    pub fn eval_real(&self, y: &[f64], x: f64) -> f64 {
        self.phi0.eval(x) + y.iter().zip(&self.modes).map(|(yj, m)| yj * m.eval(x)).sum::<f64>()
    }

    pub fn eval(&self, y: &[Complex64], x: f64) -> Complex64 {
        let mut acc = Complex64::new(self.phi0.eval(x), 0.0);
        for (yj, m) in y.iter().zip(&self.modes) {
            acc += yj * m.eval(x);
        }
        acc
    }

    /// `(min, max)` of `phi_0(x) ∓ Σ|phi_j(x)|` over `points`: the extreme
    /// values over the parameter cube, attained at `y_j = ∓sign(phi_j(x))`.
    pub fn cube_range(&self, points: impl Iterator<Item = f64>) -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut argmin = 0.0;
        for x in points {
            let center = self.phi0.eval(x);
            let spread: f64 = self.modes.iter().map(|m| m.eval(x).abs()).sum();
            if center - spread < lo {
                lo = center - spread;
                argmin = x;
            }
            hi = hi.max(center + spread);
        }
        (lo, hi, argmin)
    }
}

fn sampled_sup(f: &SpatialFn, points: impl Iterator<Item = f64>) -> f64 {
    points.map(|x| f.eval(x).abs()).fold(0.0, f64::max)
}

/// Decay field for `A` or `C`; rejects amplitudes that could make the field
/// non-positive on the cube (`base <= amplitude Σ_{j<=s} j^{-sigma}`).
pub fn make_decay_field(
    base: f64,
    amplitude: f64,
    sigma: f64,
    s: usize,
    shape: ModeShape,
) -> Result<AffineField, FieldError> {
    if !(sigma > 1.0) {
        return Err(FieldError::Config(format!("sigma = {sigma} must exceed 1")));
    }
    if amplitude < 0.0 || !amplitude.is_finite() || !base.is_finite() {
        return Err(FieldError::Config(format!("invalid base {base} / amplitude {amplitude}")));
    }
    let budget: f64 = (1..=s).map(|j| (j as f64).powf(-sigma)).sum::<f64>() * amplitude;
    if base <= budget {
        return Err(FieldError::Config(format!("base {base} does not dominate amplitude * Σ j^-sigma = {budget:.6}")));
    }
    Ok(AffineField::decay(base, amplitude, sigma, s, shape))
}

/// Nodewise values at parameter `y`; modes beyond `y.len()` are inactive.
pub fn eval_field(f: &AffineField, y: &[Complex64], x_nodes: &[f64]) -> Result<Vec<Complex64>, FieldError> {
    if y.len() > f.dimension() {
        return Err(FieldError::TooManyParameters { got: y.len(), s: f.dimension() });
    }
    Ok(x_nodes.iter().map(|x| f.eval(y, *x)).collect())
}

/// Certified bounds of the coefficient triple over the parameter cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAssumptions {
    pub a_low: f64,
    pub c_low: f64,
    /// `min(a_low, c_low)`.
    pub d_low: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    /// Componentwise `max(‖A_j‖, ‖B_j‖, ‖C_j‖)`.
    pub c: Vec<f64>,
    /// Number of sampling points the bounds were taken over.
    pub sample_points: usize,
}

/// Sampling points: mesh nodes plus cell midpoints.
pub fn nodes_and_midpoints(nodes: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * nodes.len());
    for w in nodes.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    if let Some(last) = nodes.last() {
        out.push(*last);
    }
    out
}

/// Worst-case bounds over `y ∈ [-1, 1]^s` on the given mesh nodes (and
/// midpoints). Fails when `A` or `C` can reach a non-positive value.
pub fn verify_assumptions(
    a: &AffineField,
    b: &AffineField,
    c: &AffineField,
    nodes: &[f64],
) -> Result<FieldAssumptions, FieldError> {
    let pts = nodes_and_midpoints(nodes);
    let (a_low, a_hi, a_at) = a.cube_range(pts.iter().copied());
    let (b_lo, b_hi, _) = b.cube_range(pts.iter().copied());
    let (c_low, c_hi, c_at) = c.cube_range(pts.iter().copied());
    if a_low <= 0.0 {
        return Err(FieldError::LowerBound { field: "A", value: a_low, x: a_at });
    }
    if c_low <= 0.0 {
        return Err(FieldError::LowerBound { field: "C", value: c_low, x: c_at });
    }
    Ok(FieldAssumptions {
        a_low,
        c_low,
        d_low: a_low.min(c_low),
        a_bar: a_hi.abs().max(a_low.abs()),
        b_bar: b_hi.abs().max(b_lo.abs()),
        c_bar: c_hi.abs().max(c_low.abs()),
        c: componentwise_max(&[a.amplitudes(), b.amplitudes(), c.amplitudes()]),
        sample_points: pts.len(),
    })
}

/// Lower bound of a single field (the semilinear `A` has no `C` partner).
pub fn lower_bound(f: &AffineField, name: &'static str, nodes: &[f64]) -> Result<f64, FieldError> {
    let (lo, _, at) = f.cube_range(nodes_and_midpoints(nodes).into_iter());
    if lo <= 0.0 {
        Err(FieldError::LowerBound { field: name, value: lo, x: at })
    } else {
        Ok(lo)
    }
}

pub fn componentwise_max(seqs: &[&[f64]]) -> Vec<f64> {
    let len = seqs.iter().map(|s| s.len()).max().unwrap_or(0);
    (0..len).map(|j| seqs.iter().filter_map(|s| s.get(j)).fold(0.0_f64, |m, v| m.max(*v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn decay_amplitudes() {
        let f = make_decay_field(1.0, 0.1, 2.0, 4, ModeShape::Fourier).unwrap();
        let expect = [0.1, 0.025, 0.1 / 9.0, 0.00625];
        for (c, e) in f.amplitudes().iter().zip(expect) {
            assert!((c - e).abs() < 1e-17);
        }
        // sampled sup agrees where the grid hits the peaks (n divisible by 2j)
        let pts = nodes_and_midpoints(&grid(48));
        for (m, c) in f.modes().iter().zip(f.amplitudes()) {
            assert!((sampled_sup(m, pts.iter().copied()) - c).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_rejected() {
        let f = make_decay_field(1.0, 0.0, 2.0, 4, ModeShape::Fourier).unwrap();
        assert_eq!(f.dimension(), 0);
        assert!(f.amplitudes().is_empty());
        // Σ_{j<=8} j^-1.1 ≈ 2.51, times 0.4 ≈ 1.0 > 0.5
        let partial: f64 = (1..=8).map(|j| (j as f64).powf(-1.1)).sum();
        assert!((partial - 2.5115).abs() < 1e-4);
        assert!(matches!(make_decay_field(0.5, 0.4, 1.1, 8, ModeShape::Fourier), Err(FieldError::Config(_))));
    }

    #[test]
    fn evaluation() {
        let f = make_decay_field(1.0, 0.1, 2.0, 4, ModeShape::Fourier).unwrap();
        let nodes = [0.0, 0.25, 0.5, 0.8];
        let zero = eval_field(&f, &[], &nodes).unwrap();
        assert!(zero.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let e1 = eval_field(&f, &[Complex64::new(1.0, 0.0)], &nodes).unwrap();
        for (v, x) in e1.iter().zip(nodes) {
            assert_eq!(v.im, 0.0);
            assert!((v.re - (1.0 + 0.1 * (std::f64::consts::PI * x).sin())).abs() < 1e-15);
        }
        let half_i = eval_field(&f, &[Complex64::new(0.0, 0.5)], &[0.1, 0.5, 0.9]).unwrap();
        for (v, x) in half_i.iter().zip([0.1, 0.5, 0.9]) {
            assert_eq!(v.re, 1.0);
            assert!((v.im - 0.05 * (std::f64::consts::PI * x).sin()).abs() < 1e-16);
        }
        let too_many = vec![Complex64::new(0.0, 0.0); 5];
        assert!(eval_field(&f, &too_many, &nodes).is_err());
    }

    #[test]
    fn assumptions() {
        let nodes = grid(64);
        let a = make_decay_field(1.0, 0.1, 2.0, 4, ModeShape::Fourier).unwrap();
        let b = AffineField::decay(0.0, 3.0, 2.0, 4, ModeShape::Bump);
        let c = AffineField::constant(1.0);
        let fa = verify_assumptions(&a, &b, &c, &nodes).unwrap();
        let oracle = 1.0 - 0.1 * (1..=4).map(|j| 1.0 / (j * j) as f64).sum::<f64>();
        assert!(fa.a_low >= oracle - 1e-15);
        assert!(fa.a_low < 0.95);
        assert!(fa.b_bar > 0.0);
        assert_eq!(fa.c_low, 1.0);
        assert_eq!(fa.c[0], 3.0);

        let bad = AffineField::decay(0.1, 0.2, 2.0, 4, ModeShape::Fourier);
        let err = verify_assumptions(&bad, &b, &c, &nodes).unwrap_err();
        assert!(matches!(err, FieldError::LowerBound { field: "A", .. }));
    }

    #[test]
    fn truncation_and_scaling() {
        let f = AffineField::decay(1.0, 0.2, 2.0, 6, ModeShape::Bump);
        let t = f.truncated(3);
        assert_eq!(t.dimension(), 3);
        let g = f.scaled_modes(2.0);
        assert_eq!(g.amplitudes()[0], 0.4);
        let y = [0.3, -0.2];
        assert!((g.eval_real(&y, 0.05) - (1.0 + 2.0 * (f.eval_real(&y, 0.05) - 1.0))).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn field_map_is_affine(
            y in proptest::collection::vec(-1.0f64..1.0, 6),
            z in proptest::collection::vec(-1.0f64..1.0, 6),
            x in 0.0f64..1.0,
        ) {
            let f = AffineField::decay(1.0, 0.3, 2.0, 6, ModeShape::Fourier);
            let cy: Vec<Complex64> = y.iter().map(|v| Complex64::new(*v, 0.5 * v)).collect();
            let cz: Vec<Complex64> = z.iter().map(|v| Complex64::new(*v, -v)).collect();
            let sum: Vec<Complex64> = cy.iter().zip(&cz).map(|(a, b)| a + b).collect();
            let lhs = f.eval(&sum, x) + f.eval(&[], x);
            let rhs = f.eval(&cy, x) + f.eval(&cz, x);
            proptest::prop_assert!((lhs - rhs).norm() < 1e-13);
        }

        #[test]
        fn decay_family_is_summable_and_monotone(sigma in 1.05f64..4.0, s in 1usize..40) {
            let f = AffineField::decay(10.0, 1.0, sigma, s, ModeShape::Fourier);
            let c = f.amplitudes();
            proptest::prop_assert!(c.windows(2).all(|w| w[1] <= w[0]));
            for (j, cj) in c.iter().enumerate() {
                proptest::prop_assert_eq!(*cj, ((j + 1) as f64).powf(-sigma));
            }
        }
    }
}
