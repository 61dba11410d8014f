//! Command-line front end: config parsing, subcommand dispatch and output.
//!
//! Exit codes: 0 on success, 2 for configuration or I/O errors, 3 for
//! numerical failures (assumption violations, solver breakdown, failed
//! bound validation).

pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{
    deriv_chebyshev, deriv_contour, deriv_fd, radius_estimate, CalculusError, ContourSpec, DerivativeEntry, Method,
    MultiIndex, RadiusSearch, THETA_SAFETY,
};
use crate::certify::{build_certificate, validate_bounds, validation_points, CertifyError, HoloCertificate};
use crate::combinatorics::{alpha_rows, ratio_to_f64, AlphaRule, CombinatoricsError};
use crate::exec::{init_threads, Exec};
use crate::fields::FieldError;
use crate::geometry::{ellipse_in_stadium, AdmissibleProfile, BernsteinEllipse, Budget, GeometryError};
use crate::pde::{Problem, SolverError};
use crate::qmc::{convergence_study, truncation_study, QmcError};
use config::{KindName, RunConfig, WeightSpec};
use output::{config_hash, fmt_f64, fmt_opt, Manifest, Table};

pub const THREADS_ENV: &str = "HOLO_EVP_THREADS";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::LowerBound { .. } => CliError::Numerical(format!("fields: {e}")),
            _ => CliError::Config(format!("fields: {e}")),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Domain(_) => CliError::Config(format!("pde: {e}")),
            _ => CliError::Numerical(format!("pde: {e}")),
        }
    }
}

impl From<CalculusError> for CliError {
    fn from(e: CalculusError) -> Self {
        match e {
            CalculusError::Domain(_) => CliError::Config(format!("calculus: {e}")),
            _ => CliError::Numerical(format!("calculus: {e}")),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        CliError::Numerical(format!("certify: {e}"))
    }
}

impl From<QmcError> for CliError {
    fn from(e: QmcError) -> Self {
        match e {
            QmcError::Domain(_) => CliError::Config(format!("qmc: {e}")),
            QmcError::Solve { .. } => CliError::Numerical(format!("qmc: {e}")),
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Config(format!("geometry: {e}"))
    }
}

impl From<CombinatoricsError> for CliError {
    fn from(e: CombinatoricsError) -> Self {
        CliError::Config(format!("combinatorics: {e}"))
    }
}

/// Comma-separated list argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|v| v.trim().parse::<T>().map_err(|e| format!("`{v}`: {e}")))
            .collect::<Result<_, _>>()
            .map(List)
    }
}

#[derive(Debug, Parser)]
#[command(name = "holo-evp", version, about = "Holomorphy certificates and lattice QMC for parametric eigenproblems")]
pub struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the α-sequence.
    Alpha(AlphaArgs),
    /// Geometric admissibility checks.
    #[command(subcommand)]
    Geometry(GeometryCommand),
    /// Solve for the ground pair at one parameter.
    Solve(SolveArgs),
    /// Parametric derivatives in one coordinate.
    Derivs(DerivsArgs),
    /// Fit a holomorphy certificate.
    Certify(CertifyArgs),
    /// Check mixed-derivative bounds of a certificate.
    Validate(ValidateArgs),
    /// Lattice QMC convergence or truncation study.
    Qmc(QmcArgs),
    /// Merge run directories into consolidated tables.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AlphaArgs {
    #[arg(long, default_value = "quad")]
    pub rule: AlphaRule,
    #[arg(long)]
    pub n_max: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GeometryCommand {
    /// Test `E_rho ⊂ stadium` per coordinate for a profile file.
    Check(GeometryArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GeometryArgs {
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Contents of a `geometry check` profile file.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub b: Vec<f64>,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub rule: Option<AlphaRule>,
    /// Overrides the rule's `eps`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub budget: Budget,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the problem kind of the config.
    #[arg(long)]
    pub problem: Option<KindName>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<List<f64>>,
    /// Writes nodal values of `u` (boundary included).
    #[arg(long)]
    pub dump_u: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DerivsArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// 1-based coordinate.
    #[arg(long)]
    pub j: usize,
    #[arg(long, default_value_t = 4)]
    pub n_max: u32,
    #[arg(long, default_value = "contour")]
    pub method: Method,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<List<f64>>,
    /// Contour radius; defaults to half the estimated analyticity radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Finite-difference step.
    #[arg(long, default_value_t = 0.01)]
    pub h: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub cert: PathBuf,
    /// Multi-index in dense form, e.g. `2,1`; repeatable.
    #[arg(long, required = true)]
    pub nu: Vec<MultiIndex>,
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    /// Multiplies `β` before checking (values below 1 give a deliberately
    /// optimistic certificate).
    #[arg(long, default_value_t = 1.0)]
    pub scale_beta: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct QmcArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "N")]
    pub n: Option<List<u64>>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long = "R")]
    pub r: Option<usize>,
    /// Runs a truncation study over these dimensions at the first `N`.
    #[arg(long)]
    pub truncation: Option<List<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub run_dirs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a count")))?;
        init_threads(n);
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match &cli.command {
        Command::Alpha(a) => alpha(a),
        Command::Geometry(GeometryCommand::Check(a)) => geometry_check(a),
        Command::Solve(a) => solve(a),
        Command::Derivs(a) => derivs(a),
        Command::Certify(a) => certify(a, exec),
        Command::Validate(a) => validate(a, exec),
        Command::Qmc(a) => qmc(a, exec),
        Command::Report(a) => report_cmd(a),
    }
}

/// Prints the table and, with `out`, writes it plus a manifest.
fn emit(table: &Table, out: Option<&Path>, hash: &str, manifest: Manifest) -> Result<(), CliError> {
    print!("{}", table.to_csv(hash)?);
    if let Some(path) = out {
        table.write(path, hash)?;
        manifest.write(&[path])?;
    }
    Ok(())
}

fn alpha(a: &AlphaArgs) -> Result<(), CliError> {
    let rows = alpha_rows(a.n_max, a.rule)?;
    let mut table = Table::new(&["n", "alpha", "ratio", "ratio_f64"]);
    for r in rows {
        table.push(vec![
            r.n.to_string(),
            r.alpha.to_string(),
            r.ratio.as_ref().map(|q| q.to_string()).unwrap_or_default(),
            fmt_opt(r.ratio.as_ref().map(ratio_to_f64)),
        ]);
    }
    let hash = config_hash(&(a.rule, a.n_max));
    emit(&table, a.out.as_deref(), &hash, Manifest::new("alpha", "alpha", &hash, 0))
}

fn geometry_check(a: &GeometryArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.profile)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.profile.display())))?;
    let file: ProfileFile = toml::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let eps = file.eps.unwrap_or(file.rule.unwrap_or(AlphaRule::QuadrupleFactorial).eps());
    let profile = AdmissibleProfile::new(file.b.clone(), eps, file.p)?;
    let used = profile.budget_used(&file.rho, file.budget)?;
    let mut table = Table::new(&["j", "b_j", "rho_j", "R_minor", "R_major", "radius", "included"]);
    for (j, rho) in file.rho.iter().enumerate() {
        let e = BernsteinEllipse::new(*rho)?;
        let st = profile.stadium(j);
        let check = ellipse_in_stadium(&e, &st, a.samples);
        table.push(vec![
            (j + 1).to_string(),
            fmt_f64(profile.b[j]),
            fmt_f64(*rho),
            fmt_f64(e.semi_minor()),
            fmt_f64(e.semi_major()),
            fmt_f64(st.radius),
            check.included().to_string(),
        ]);
    }
    eprintln!("budget used {} of eps = {}: admissible = {}", fmt_f64(used), fmt_f64(eps), used <= eps);
    let hash = config_hash(&(&file, a.samples));
    let meta = serde_json::json!({ "budget_used": used, "eps": eps, "admissible": used <= eps });
    emit(&table, a.out.as_deref(), &hash, Manifest::new("geometry check", "geometry", &hash, 0).with_metadata(&meta))
}

fn load(path: &Path, kind: Option<KindName>) -> Result<(RunConfig, Problem), CliError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(k) = kind {
        cfg.problem.kind = k;
        if k == KindName::Linear {
            cfg.problem.eta = None;
            cfg.problem.p = None;
        }
        cfg.validate()?;
    }
    let problem = cfg.build_problem()?;
    Ok((cfg, problem))
}

fn parameter(y: Option<&List<f64>>, s: usize) -> Result<Vec<f64>, CliError> {
    let y = y.map(|l| l.0.clone()).unwrap_or_else(|| vec![0.0; s]);
    if y.len() > s {
        return Err(CliError::Config(format!("{} parameters given, problem has s = {s}", y.len())));
    }
    Ok(y)
}

fn join(y: &[f64]) -> String {
    y.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

fn solve(a: &SolveArgs) -> Result<(), CliError> {
    let (cfg, problem) = load(&a.config, a.problem)?;
    let y = parameter(a.y.as_ref(), problem.dimension())?;
    let pair = problem.solve_real(&y, None)?;
    let mut table = Table::new(&["y", "lambda", "residual", "hnorm", "iterations"]);
    table.push(vec![
        join(&y),
        fmt_f64(pair.lambda.re),
        fmt_f64(pair.residual),
        fmt_f64(problem.hnorm(&pair.u)),
        pair.iterations.to_string(),
    ]);
    let hash = config_hash(&cfg);
    if let Some(path) = &a.dump_u {
        let mut u = Table::new(&["x", "u"]);
        let nodes = problem.mesh().nodes();
        let values: Vec<f64> =
            std::iter::once(0.0).chain(pair.u.iter().map(|v| v.re)).chain(std::iter::once(0.0)).collect();
        for (x, v) in nodes.iter().zip(values) {
            u.push(vec![fmt_f64(*x), fmt_f64(v)]);
        }
        u.write(path, &hash)?;
    }
    emit(&table, a.out.as_deref(), &hash, Manifest::new("solve", "solve", &hash, cfg.seed))
}

fn derivs(a: &DerivsArgs) -> Result<(), CliError> {
    let (cfg, problem) = load(&a.config, None)?;
    if a.j == 0 || a.j > problem.dimension() {
        return Err(CliError::Config(format!("--j {} outside 1..={}", a.j, problem.dimension())));
    }
    let j = a.j - 1;
    let y = parameter(a.y.as_ref(), problem.dimension())?;
    let entries: Vec<DerivativeEntry> = match a.method {
        Method::Fd => (1..=a.n_max).map(|n| deriv_fd(&problem, &y, j, n, a.h)).collect::<Result<_, _>>()?,
        Method::Chebyshev => deriv_chebyshev(&problem, &y, j, a.n_max)?,
        Method::Contour => {
            let radius = match a.radius {
                Some(r) => r,
                None => THETA_SAFETY * radius_estimate(&problem, &y, j, &RadiusSearch::default()),
            };
            if !(radius > 0.0) {
                return Err(CliError::Numerical("calculus: no closing contour found around y".into()));
            }
            deriv_contour(&problem, &y, &ContourSpec::new(j, radius, a.n_max), a.n_max)?.entries
        }
    };
    let mut table = Table::new(&["y", "nu", "method", "d_lambda_re", "d_lambda_im", "hnorm_du", "est_error"]);
    for e in &entries {
        table.push(vec![
            join(&y),
            e.nu.to_string(),
            e.method.name().into(),
            fmt_f64(e.d_lambda.re),
            fmt_f64(e.d_lambda.im),
            fmt_f64(e.hnorm_du),
            fmt_f64(e.est_error),
        ]);
    }
    let hash = config_hash(&cfg);
    emit(&table, a.out.as_deref(), &hash, Manifest::new("derivs", "derivs", &hash, cfg.seed).with_metadata(a))
}

fn certify(a: &CertifyArgs, exec: Exec) -> Result<(), CliError> {
    let (cfg, problem) = load(&a.config, None)?;
    let cert = build_certificate(&problem, &cfg.certify, exec)?;
    let text = serde_json::to_string_pretty(&cert).expect("certificate serialises") + "\n";
    output::ensure_parent(&a.out)?;
    std::fs::write(&a.out, &text).map_err(|e| CliError::Io(format!("{}: {e}", a.out.display())))?;
    print!("{text}");
    let hash = config_hash(&cfg);
    Manifest::new("certify", "certificate", &hash, cfg.certify.seed).write(&[&a.out])?;
    Ok(())
}

fn validate(a: &ValidateArgs, exec: Exec) -> Result<(), CliError> {
    let (cfg, problem) = load(&a.config, None)?;
    let text = std::fs::read_to_string(&a.cert)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", a.cert.display())))?;
    let cert: HoloCertificate =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("certificate: {e}")))?;
    if cert.dimension() != problem.dimension() {
        return Err(CliError::Config(format!(
            "certificate has s = {}, config has s = {}",
            cert.dimension(),
            problem.dimension()
        )));
    }
    if !(a.scale_beta > 0.0) {
        return Err(CliError::Config("--scale-beta must be positive".into()));
    }
    let cert = if a.scale_beta == 1.0 { cert } else { cert.with_beta_scaled(a.scale_beta) };
    let ys = validation_points(problem.dimension(), a.points, cfg.seed);
    let report = validate_bounds(&cert, &problem, &ys, &a.nu, exec);
    let mut table = Table::new(&[
        "nu",
        "measured_lambda",
        "measured_u",
        "predicted_lambda",
        "predicted_u",
        "worst_ratio",
        "pass",
        "errors",
    ]);
    for r in &report.rows {
        table.push(vec![
            r.nu.to_string(),
            fmt_opt(r.measured_lambda),
            fmt_opt(r.measured_u),
            fmt_f64(r.predicted_lambda),
            fmt_f64(r.predicted_u),
            fmt_opt(r.worst_ratio),
            r.pass.map(|p| p.to_string()).unwrap_or_default(),
            r.errors.join(" | "),
        ]);
    }
    let hash = config_hash(&(&cfg, &cert));
    print!("{}", table.to_csv(&hash)?);
    if let Some(path) = &a.out {
        table.append(path, &hash)?;
        Manifest::new("validate", "bounds", &hash, cfg.seed).with_metadata(a).write(&[path])?;
    }
    match report.fail_count() {
        0 => Ok(()),
        k => Err(CliError::Numerical(format!("certify: {k} of {} bound rows fail", report.rows.len()))),
    }
}

fn cbc_weights(cfg: &RunConfig, problem: &Problem, s: usize, exec: Exec) -> Result<Vec<f64>, CliError> {
    let w = match &cfg.qmc.weights {
        WeightSpec::Certificate => build_certificate(problem, &cfg.certify, exec)?.b.iter().map(|b| b * b).collect(),
        WeightSpec::Amplitudes => problem.amplitudes().iter().map(|c| c * c).collect(),
        WeightSpec::Explicit { w } => w.clone(),
    };
    if w.len() < s {
        return Err(CliError::Config(format!("{} CBC weights for s = {s}", w.len())));
    }
    Ok(w[..s].to_vec())
}

fn qmc(a: &QmcArgs, exec: Exec) -> Result<(), CliError> {
    let (mut cfg, problem) = load(&a.config, None)?;
    if let Some(n) = &a.n {
        cfg.qmc.n_list = n.0.clone();
    }
    if let Some(r) = a.r {
        cfg.qmc.r = r;
    }
    let s = a.s.unwrap_or(problem.dimension());
    if s == 0 || s > problem.dimension() {
        return Err(CliError::Config(format!("--s {s} outside 1..={}", problem.dimension())));
    }
    cfg.validate()?;
    let functional = cfg.functional(&problem);
    let problem = problem.truncated(s);
    let hash = config_hash(&(&cfg, s, &a.truncation));
    match &a.truncation {
        None => {
            let weights = cbc_weights(&cfg, &problem, s, exec)?;
            let study = convergence_study(
                &problem,
                &functional,
                &cfg.qmc.n_list,
                &weights,
                cfg.qmc.r,
                cfg.seed,
                cfg.qmc.mode,
                exec,
            )?;
            let mut table = Table::new(&["N", "s", "R", "estimate", "rms", "alpha_obs"]);
            for row in &study.rows {
                table.push(vec![
                    row.n.to_string(),
                    row.s.to_string(),
                    row.r.to_string(),
                    fmt_f64(row.estimate),
                    fmt_f64(row.rms),
                    fmt_opt(row.alpha_partial),
                ]);
            }
            let gens: Vec<&Vec<u64>> = study.rows.iter().map(|r| &r.z).collect();
            let meta = serde_json::json!({ "weights": weights, "generators": gens, "alpha_obs": study.alpha_obs });
            let manifest = Manifest::new("qmc", "qmc_study", &hash, cfg.seed).with_metadata(&meta);
            emit(&table, a.out.as_deref(), &hash, manifest)
        }
        Some(s_list) => {
            let s_max = *s_list.0.last().ok_or_else(|| CliError::Config("empty --truncation".into()))?;
            if s_max > s {
                return Err(CliError::Config(format!("truncation dimension {s_max} exceeds s = {s}")));
            }
            let n = *cfg.qmc.n_list.first().ok_or_else(|| CliError::Config("empty N list".into()))?;
            let weights = cbc_weights(&cfg, &problem, s_max, exec)?;
            let study = truncation_study(&problem, &functional, &s_list.0, n, &weights, cfg.qmc.r, cfg.seed, exec)?;
            let mut table = Table::new(&["s", "N", "R", "estimate", "rms", "difference", "decay_exponent"]);
            for row in &study.rows {
                table.push(vec![
                    row.s.to_string(),
                    n.to_string(),
                    cfg.qmc.r.to_string(),
                    fmt_f64(row.estimate),
                    fmt_f64(row.rms),
                    fmt_f64(row.difference),
                    fmt_opt(study.decay_exponent),
                ]);
            }
            let meta = serde_json::json!({ "weights": weights, "decay_exponent": study.decay_exponent });
            let manifest = Manifest::new("qmc", "qmc_truncation", &hash, cfg.seed).with_metadata(&meta);
            emit(&table, a.out.as_deref(), &hash, manifest)
        }
    }
}

fn report_cmd(a: &ReportArgs) -> Result<(), CliError> {
    let merged = report::merge(&a.run_dirs);
    for w in &merged.warnings {
        eprintln!("warning: {w}");
    }
    for path in report::write_report(&merged, &a.out)? {
        println!("{}", path.display());
    }
    Ok(())
}
