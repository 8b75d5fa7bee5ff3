//! Command-line front end: strict JSON run configs, CSV tables and run metadata.
//!
//! Exit codes: 0 on success, 1 on validation errors, 2 when a numerical method stops short.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::nonexistence::{nonexistence_demo, NonexistenceParams};
use crate::experiments::poincare::{poincare_sweep, PoincareMode};
use crate::experiments::verify::{run_suite, Suite};
use crate::experiments::{
    bbm_convergence, dirichlet_convergence, neumann_convergence, pointwise_convergence, ConvergenceRow, MeshSpec,
};
use crate::forms::{assemble, DiagonalRule, GridFunction, Region};
use crate::kernels::{concentration_report, ApproxFamily, Family, KernelSpec};
use crate::mesh::Mesh1D;
use crate::operators::SmoothFunction1D;
use crate::solvers::{solve, ProblemKind, ProblemSpec, SolveReport, SolverConfig};
use crate::special::ConstantsReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Bbm,
    Pointwise,
    Dirichlet,
    Neumann,
    Nonexistence,
    Poincare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Inequalities,
    Forms,
    Solvers,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Inequalities => Suite::Inequalities,
            SuiteArg::Forms => Suite::Forms,
            SuiteArg::Solvers => Suite::Solvers,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "plevy", version, about = "Nonlocal p-Levy complement-value problems on 1D meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the normalization constants for (d, p, s) as one CSV row.
    Constants {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        s: f64,
    },
    /// Print kernel masses; sweeps `experiment.eps_list` when an experiment block is present.
    CheckKernel {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve one complement-value problem and write solution.csv, report.csv and meta.csv.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run an epsilon sweep and print the convergence table.
    Converge {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        /// Also write convergence.csv and meta.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a self-check suite and print TAP lines.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_interior: usize,
    #[serde(rename = "collar_R", alias = "collar_r")]
    pub collar_r: f64,
}

/// Kernel description; `d = 1` and `p` come from the run.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Fractional { s: f64 },
    TruncatedFractional { s: f64, r_cut: f64 },
    Indicator { delta: f64 },
    /// Unit-ball indicator with unit p-Lévy mass.
    NormalizedIndicator,
    StableNormalized { epsilon: f64 },
    PowerTruncated { epsilon: f64, beta: f64 },
    Rescaled { base: Box<KernelConfig>, epsilon: f64 },
    ScaledFractional { s: f64, prefactor: f64 },
}

impl KernelConfig {
    fn check_s(s: f64, errors: &mut Vec<String>) {
        if !(s > 0.0 && s < 1.0) {
            errors.push(format!("kernel.s: s must lie in (0,1), got {s}"));
        }
    }

    fn collect_errors(&self, errors: &mut Vec<String>) {
        match self {
            KernelConfig::Fractional { s }
            | KernelConfig::TruncatedFractional { s, .. }
            | KernelConfig::ScaledFractional { s, .. } => Self::check_s(*s, errors),
            KernelConfig::Rescaled { base, .. } => base.collect_errors(errors),
            _ => {}
        }
    }

    pub fn build(&self, p: f64) -> Result<KernelSpec> {
        let family = match self {
            KernelConfig::Fractional { s } => Family::Fractional { s: *s },
            KernelConfig::TruncatedFractional { s, r_cut } => Family::TruncatedFractional { s: *s, r_cut: *r_cut },
            KernelConfig::Indicator { delta } => Family::Indicator { delta: *delta },
            KernelConfig::NormalizedIndicator => return KernelSpec::normalized_indicator(1, p),
            KernelConfig::StableNormalized { epsilon } => Family::StableNormalized { epsilon: *epsilon },
            KernelConfig::PowerTruncated { epsilon, beta } => Family::PowerTruncated { epsilon: *epsilon, beta: *beta },
            KernelConfig::Rescaled { base, epsilon } => return KernelSpec::rescaled(base.build(p)?, *epsilon),
            KernelConfig::ScaledFractional { s, prefactor } => {
                Family::ScaledFractional { s: *s, prefactor: *prefactor }
            }
        };
        KernelSpec::new(family, 1, p)
    }

    fn epsilon(&self) -> Option<f64> {
        match self {
            KernelConfig::StableNormalized { epsilon }
            | KernelConfig::PowerTruncated { epsilon, .. }
            | KernelConfig::Rescaled { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }
}

/// A constant, one value per mesh node, or a closed-form function.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged, expecting = "a number, an array of nodal values, or a function object with a \"kind\" tag")]
pub enum DataSpec {
    Constant(f64),
    Nodal(Vec<f64>),
    Function(SmoothFunction1D),
}

impl DataSpec {
    pub fn grid(&self, mesh: &Arc<Mesh1D>, field: &str) -> Result<GridFunction> {
        match self {
            DataSpec::Constant(c) => Ok(GridFunction::from_fn(mesh.clone(), |_| *c)),
            DataSpec::Nodal(v) => {
                if v.len() != mesh.len() {
                    return Err(Error::Config(format!(
                        "{field}: expected {} nodal values, got {}",
                        mesh.len(),
                        v.len()
                    )));
                }
                GridFunction::new(mesh.clone(), v.clone())
            }
            DataSpec::Function(f) => Ok(GridFunction::from_fn(mesh.clone(), |x| f.value(x))),
        }
    }

    pub fn function(&self, field: &str) -> Result<SmoothFunction1D> {
        match self {
            DataSpec::Constant(c) => Ok(SmoothFunction1D::constant(*c)),
            DataSpec::Function(f) => Ok(f.clone()),
            DataSpec::Nodal(_) => Err(Error::Config(format!("{field}: sweeps need a constant or a function, not nodal values"))),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            DataSpec::Constant(c) => *c == 0.0,
            DataSpec::Nodal(v) => v.iter().all(|&x| x == 0.0),
            DataSpec::Function(SmoothFunction1D::Polynomial { coeffs }) => coeffs.iter().all(|&c| c == 0.0),
            DataSpec::Function(_) => false,
        }
    }

    fn collect_errors(&self, field: &str, errors: &mut Vec<String>) {
        match self {
            DataSpec::Constant(c) if !c.is_finite() => errors.push(format!("{field}: must be finite")),
            DataSpec::Nodal(v) if v.iter().any(|x| !x.is_finite()) => {
                errors.push(format!("{field}: nodal values must be finite"))
            }
            DataSpec::Function(f) => {
                if let Err(e) = f.validate() {
                    errors.push(format!("{field}: {e}"));
                }
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub f: DataSpec,
    pub g: DataSpec,
    #[serde(default)]
    pub beta: Option<DataSpec>,
    /// Scales the form; defaults to 1.
    #[serde(default)]
    pub mu: Option<f64>,
    /// Couple to zero values beyond the collar analytically. Only sound when `g` vanishes far out.
    #[serde(default)]
    pub far_field_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub tol_grad: Option<f64>,
    #[serde(default)]
    pub delta_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub memory: Option<usize>,
}

impl SolverSection {
    pub fn build(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol: self.tol_grad.unwrap_or(d.tol),
            delta_schedule: self.delta_schedule.clone().unwrap_or(d.delta_schedule),
            memory: self.memory.unwrap_or(d.memory),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub family: Option<ApproxFamily>,
    /// `u` for bbm and pointwise, `phi` for neumann.
    #[serde(default)]
    pub test_function: Option<SmoothFunction1D>,
    /// Evaluation point for pointwise.
    #[serde(default)]
    pub x: Option<f64>,
    /// Tail radius for check-kernel.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub mode: Option<PoincareMode>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl ExperimentConfig {
    fn family(&self) -> ApproxFamily {
        self.family.clone().unwrap_or(ApproxFamily::StableNormalized)
    }

    fn test_function(&self) -> Result<&SmoothFunction1D> {
        self.test_function.as_ref().ok_or_else(|| missing("experiment.test_function"))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub kernel: Option<KernelConfig>,
    pub p: f64,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: Option<SolverSection>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing field `{field}`"))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every field-level problem, joined; nothing is computed before this passes.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let DomainConfig { a, b } = self.domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            errors.push(format!("domain: need finite a < b, got ({a}, {b})"));
        }
        if self.mesh.n_interior < 4 {
            errors.push(format!("mesh.n_interior: must be at least 4, got {}", self.mesh.n_interior));
        }
        if !(self.mesh.collar_r > 0.0 && self.mesh.collar_r.is_finite()) {
            errors.push(format!("mesh.collar_R: must be positive, got {}", self.mesh.collar_r));
        }
        let p_ok = self.p > 1.0 && self.p.is_finite();
        if !p_ok {
            errors.push(format!("p: must exceed 1, got {}", self.p));
        }
        if let Some(k) = &self.kernel {
            let before = errors.len();
            k.collect_errors(&mut errors);
            if errors.len() == before && p_ok {
                if let Err(e) = k.build(self.p) {
                    errors.push(format!("kernel: {e}"));
                }
            }
        }
        if let Some(pr) = &self.problem {
            pr.f.collect_errors("problem.f", &mut errors);
            pr.g.collect_errors("problem.g", &mut errors);
            match (&pr.beta, pr.kind) {
                (Some(beta), _) => beta.collect_errors("problem.beta", &mut errors),
                (None, ProblemKind::Robin) => errors.push("problem.beta: required for robin problems".into()),
                _ => {}
            }
            if let Some(mu) = pr.mu {
                if !(mu > 0.0 && mu.is_finite()) {
                    errors.push(format!("problem.mu: must be positive, got {mu}"));
                }
            }
        }
        if let Some(s) = &self.solver {
            if s.max_iter == Some(0) {
                errors.push("solver.max_iter: must be positive".into());
            }
            if let Some(t) = s.tol_grad {
                if !(t > 0.0 && t.is_finite()) {
                    errors.push(format!("solver.tol_grad: must be positive, got {t}"));
                }
            }
            if let Some(d) = &s.delta_schedule {
                if d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    errors.push("solver.delta_schedule: entries must be positive".into());
                }
            }
            if s.memory == Some(0) {
                errors.push("solver.memory: must be positive".into());
            }
        }
        if let Some(ex) = &self.experiment {
            if ex.eps_list.is_empty() {
                errors.push("experiment.eps_list: must not be empty".into());
            }
            if let Some(e) = ex.eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                errors.push(format!("experiment.eps_list: entries must lie in (0,1), got {e}"));
            }
            if let Some(f) = &ex.test_function {
                if let Err(e) = f.validate() {
                    errors.push(format!("experiment.test_function: {e}"));
                }
            }
            if let Some(d) = ex.delta {
                if !(d > 0.0 && d.is_finite()) {
                    errors.push(format!("experiment.delta: must be positive, got {d}"));
                }
            }
            if ex.trials == Some(0) {
                errors.push("experiment.trials: must be positive".into());
            }
            if p_ok && errors.is_empty() {
                if let Some(e) = ex.eps_list.first() {
                    if let Err(err) = ex.family().member(1, self.p, *e) {
                        errors.push(format!("experiment.family: {err}"));
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }

    pub fn mesh_spec(&self) -> MeshSpec {
        MeshSpec { a: self.domain.a, b: self.domain.b, n_interior: self.mesh.n_interior, collar_r: self.mesh.collar_r }
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.as_ref().map_or_else(SolverConfig::default, SolverSection::build)
    }

    fn experiment(&self) -> Result<&ExperimentConfig> {
        self.experiment.as_ref().ok_or_else(|| missing("experiment"))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("epsilon,quantity,reference,abs_error,rel_error\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            num(r.epsilon),
            num(r.quantity),
            num(r.reference),
            num(r.abs_error),
            num(r.rel_error)
        );
    }
    s
}

pub fn constants_csv(r: &ConstantsReport) -> String {
    format!(
        "d,p,s,sphere_measure,k_dp,c_dps,c_tilde\n{},{},{},{},{},{},{}\n",
        r.d,
        num(r.p),
        num(r.s),
        num(r.sphere_measure),
        num(r.k_dp),
        num(r.c_dps),
        num(r.c_tilde)
    )
}

pub fn solution_csv(rep: &SolveReport) -> String {
    let mesh = rep.u.mesh();
    let mut s = String::from("x,u,is_interior\n");
    for (k, &x) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", num(x), num(rep.u.values[k]), mesh.is_interior[k]);
    }
    s
}

pub fn report_csv(rep: &SolveReport) -> String {
    format!(
        "iterations,final_energy,variational_residual,converged,truncation_defect\n{},{},{},{},{}\n",
        rep.iterations,
        num(rep.final_energy),
        num(rep.variational_residual),
        rep.converged,
        num(rep.truncation_defect)
    )
}

fn meta_csv(command: &str, seed: u64, wall: f64) -> String {
    format!("version,command,seed,wall_time_s\n{},{command},{seed},{}\n", env!("CARGO_PKG_VERSION"), num(wall))
}

/// Outcome of a command: stdout text and whether a numerical method fell short.
struct Outcome {
    stdout: String,
    nonconverged: bool,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { stdout, nonconverged: false }
    }
}

fn check_kernel(cfg: &RunConfig) -> Result<String> {
    let delta = cfg.experiment.as_ref().and_then(|e| e.delta).unwrap_or(1.0);
    let mut s = String::from("epsilon,total_plevy_mass,near_mass,tail_mass_delta,divergent\n");
    let rows = match (&cfg.experiment, &cfg.kernel) {
        (Some(ex), _) => {
            let fam = ex.family();
            concentration_report(|e| fam.member(1, cfg.p, e), &ex.eps_list, delta)?
                .into_iter()
                .map(|r| (r.epsilon, r.total_plevy_mass, r.near_mass, r.tail_mass_delta, r.divergent))
                .collect()
        }
        (None, Some(k)) => {
            let kernel = k.build(cfg.p)?;
            let m = kernel.plevy_mass();
            let t = kernel.tail_mass(delta);
            let eps = k.epsilon().unwrap_or(f64::NAN);
            vec![(eps, m.total_plevy_mass, m.near_mass, t.value, m.divergent || t.divergent)]
        }
        (None, None) => return Err(missing("kernel")),
    };
    for (e, total, near, tail, div) in rows {
        let _ = writeln!(s, "{},{},{},{},{div}", num(e), num(total), num(near), num(tail));
    }
    Ok(s)
}

fn solve_config(cfg: &RunConfig) -> Result<SolveReport> {
    let pr = cfg.problem.as_ref().ok_or_else(|| missing("problem"))?;
    let kernel = cfg.kernel.as_ref().ok_or_else(|| missing("kernel"))?.build(cfg.p)?;
    let mesh = cfg.mesh_spec().build()?;
    let mut form = assemble(mesh.clone(), &kernel, Region::FullComplement, DiagonalRule::LocalExact)?;
    if pr.far_field_zero {
        if !pr.g.is_zero() && !matches!(pr.g, DataSpec::Function(SmoothFunction1D::Gaussian { .. } | SmoothFunction1D::BumpCompact { .. })) {
            return Err(Error::Config("problem.far_field_zero: g must vanish away from the domain".into()));
        }
        form = form.with_far_field_zero()?;
    }
    let f = pr.f.grid(&mesh, "problem.f")?;
    let g = pr.g.grid(&mesh, "problem.g")?;
    let mut spec = ProblemSpec::new(pr.kind, form, f, g)
        .with_mu(pr.mu.unwrap_or(1.0))
        .with_solver(cfg.solver_config());
    if let Some(beta) = &pr.beta {
        spec = spec.with_beta(beta.grid(&mesh, "problem.beta")?);
    }
    solve(&spec)
}

fn converge(cfg: &RunConfig, experiment: Experiment) -> Result<Outcome> {
    let ex = cfg.experiment()?;
    let p = cfg.p;
    let family = ex.family();
    let rows_only = |rows: Vec<ConvergenceRow>| Outcome::ok(convergence_csv(&rows));
    let sweep_outcome = |sweep: crate::experiments::Sweep| {
        for w in &sweep.warnings {
            eprintln!("warning: {w}");
        }
        Outcome { stdout: convergence_csv(&sweep.rows), nonconverged: sweep.unconverged > 0 }
    };
    Ok(match experiment {
        Experiment::Bbm => rows_only(bbm_convergence(ex.test_function()?, &family, p, &ex.eps_list, cfg.mesh.n_interior)?),
        Experiment::Pointwise => {
            let x = ex.x.ok_or_else(|| missing("experiment.x"))?;
            rows_only(pointwise_convergence(ex.test_function()?, &family, p, x, &ex.eps_list)?)
        }
        Experiment::Dirichlet => {
            let pr = cfg.problem.as_ref().ok_or_else(|| missing("problem"))?;
            let (f, g) = (pr.f.function("problem.f")?, pr.g.function("problem.g")?);
            sweep_outcome(dirichlet_convergence(p, &f, &g, &family, &ex.eps_list, &cfg.mesh_spec(), &cfg.solver_config())?)
        }
        Experiment::Neumann => sweep_outcome(neumann_convergence(
            p,
            ex.test_function()?,
            &family,
            &ex.eps_list,
            &cfg.mesh_spec(),
            &cfg.solver_config(),
        )?),
        Experiment::Nonexistence => {
            let params = NonexistenceParams {
                s: ex.s.ok_or_else(|| missing("experiment.s"))?,
                p,
                gamma: ex.gamma.ok_or_else(|| missing("experiment.gamma"))?,
                beta: ex.beta.ok_or_else(|| missing("experiment.beta"))?,
            };
            let rep = nonexistence_demo(params)?;
            eprintln!(
                "log fit: slope {:.6e}, R^2 {:.6e}; W-norm tail {:.3e}",
                rep.fit.slope, rep.fit.r_squared, rep.w_norm_p.cauchy_tail
            );
            rows_only(rep.rows())
        }
        Experiment::Poincare => rows_only(poincare_sweep(
            &family,
            p,
            &ex.eps_list,
            cfg.mesh.n_interior,
            ex.mode.unwrap_or(PoincareMode::MeanZero),
            ex.trials.unwrap_or(4),
            cfg.seed,
        )?),
    })
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<Outcome> {
    let start = Instant::now();
    match cmd {
        Command::Constants { d, p, s } => Ok(Outcome::ok(constants_csv(&ConstantsReport::compute(d, p, s)?))),
        Command::CheckKernel { config } => Ok(Outcome::ok(check_kernel(&parse_config(&config)?)?)),
        Command::Solve { config, out } => {
            let cfg = parse_config(&config)?;
            let rep = solve_config(&cfg)?;
            write_file(&out, "solution.csv", &solution_csv(&rep))?;
            let report = report_csv(&rep);
            write_file(&out, "report.csv", &report)?;
            write_file(&out, "meta.csv", &meta_csv("solve", cfg.seed, start.elapsed().as_secs_f64()))?;
            Ok(Outcome { stdout: report, nonconverged: !rep.converged })
        }
        Command::Converge { experiment, config, out } => {
            let cfg = parse_config(&config)?;
            let outcome = converge(&cfg, experiment)?;
            if let Some(dir) = out {
                write_file(&dir, "convergence.csv", &outcome.stdout)?;
                write_file(&dir, "meta.csv", &meta_csv("converge", cfg.seed, start.elapsed().as_secs_f64()))?;
            }
            Ok(outcome)
        }
        Command::Verify { suite, seed } => {
            let rep = run_suite(suite.into(), seed)?;
            Ok(Outcome { stdout: rep.to_string(), nonconverged: !rep.all_ok() })
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Nondifferentiable(..) => EXIT_NONCONVERGED,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(o) => {
            print!("{}", o.stdout);
            if o.nonconverged {
                EXIT_NONCONVERGED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "domain": {"a": -1, "b": 1},
        "mesh": {"n_interior": 32, "collar_R": 1.0},
        "kernel": {"family": "fractional", "s": 0.5},
        "p": 2,
        "problem": {"kind": "dirichlet", "f": 1.0, "g": 0.0}
    }"#;

    #[test]
    fn minimal_dirichlet_is_valid() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.kernel, Some(KernelConfig::Fractional { s: 0.5 }));
        assert_eq!(cfg.problem.unwrap().f, DataSpec::Constant(1.0));
    }

    #[test]
    fn bad_s_is_rejected() {
        let err = RunConfig::from_json(&MINIMAL.replace("0.5", "1.2")).unwrap_err().to_string();
        assert!(err.contains("s must lie in (0,1)"), "{err}");
    }

    #[test]
    fn tiny_mesh_is_rejected() {
        let err = RunConfig::from_json(&MINIMAL.replace("32", "2")).unwrap_err().to_string();
        assert!(err.contains("mesh.n_interior"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let top = MINIMAL.replace("\"p\": 2", "\"p\": 2, \"typo\": 1");
        assert!(RunConfig::from_json(&top).unwrap_err().to_string().contains("typo"));
        let nested = MINIMAL.replace("\"s\": 0.5", "\"s\": 0.5, \"delta\": 1");
        assert!(RunConfig::from_json(&nested).is_err());
    }

    #[test]
    fn missing_field_is_named() {
        let err = RunConfig::from_json(&MINIMAL.replace("\"p\": 2,", "")).unwrap_err().to_string();
        assert!(err.contains("`p`"), "{err}");
    }

    #[test]
    fn data_specs() {
        let v: DataSpec = serde_json::from_str("[1, 2]").unwrap();
        assert_eq!(v, DataSpec::Nodal(vec![1.0, 2.0]));
        let f: DataSpec = serde_json::from_str(r#"{"kind": "gaussian", "center": 0, "width": 0.5}"#).unwrap();
        assert_eq!(f, DataSpec::Function(SmoothFunction1D::gaussian(0.0, 0.5)));
        assert!(serde_json::from_str::<DataSpec>("\"one\"").is_err());
    }

    #[test]
    fn robin_needs_beta() {
        let err = RunConfig::from_json(&MINIMAL.replace("dirichlet", "robin")).unwrap_err().to_string();
        assert!(err.contains("problem.beta"), "{err}");
    }

    #[test]
    fn numbers_carry_17_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }
}
