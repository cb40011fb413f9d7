//! Command implementations behind the `biharm` binary. Each command writes its
//! artifacts into an output directory and returns a [`Status`] whose exit code
//! the binary passes on.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use biharm_core::analysis::{fit_growth, principal_directions, GrowthFit, GrowthModel};
use biharm_core::diagnostics::{diagnose, DiagnoseOptions};
use biharm_core::model::{
    preset, to_report_json, write_trace_csv, KernelVariant, Preset, Profile, QuadraticPolynomial, SolutionReport,
    SolveConfig,
};
use biharm_core::operator::{continuation_with_operator, FixedPointSolver, IntegralOperator};
use biharm_core::shooting::{bisect_growth_threshold, integrate_radial, Outcome, Trajectory};
use biharm_core::verify::{exact_q7, exact_q7_a, exact_q7_laplacian, exact_q7_radial, verify_profile, Thresholds};
use biharm_core::ConfigError;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] biharm_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(biharm_core::Error::BracketNotFound { .. }) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// How a command that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Diverged,
    ChecksFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Diverged => 2,
            Status::ChecksFailed => 3,
        }
    }
}

/// Exit code of a command result; errors are printed to standard error.
pub fn exit_code(result: &Result<Status>) -> i32 {
    match result {
        Ok(s) => s.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Where a configuration comes from.
#[derive(Debug, Clone)]
pub enum ConfigSource {
    File(PathBuf),
    Preset(String),
}

/// Reads a bare `SolveConfig` document or a preset document wrapping one.
pub fn load_config(source: &ConfigSource) -> Result<SolveConfig> {
    match source {
        ConfigSource::Preset(name) => Ok(preset(name)?.config),
        ConfigSource::File(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let parse = |source| CliError::Parse {
                path: path.clone(),
                source,
            };
            let value: serde_json::Value = serde_json::from_str(&text).map_err(parse)?;
            if value.get("config").is_some() {
                Ok(serde_json::from_value::<Preset>(value).map_err(parse)?.config)
            } else {
                serde_json::from_value(value).map_err(parse)
            }
        }
    }
}

/// The configuration of the last continuation step, or `cfg` itself.
pub fn final_config(cfg: &SolveConfig) -> SolveConfig {
    match cfg.eps_sequence.as_deref().and_then(|s| s.last()) {
        Some(&eps) => cfg.with_eps(eps),
        None => cfg.clone(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_report_json(value)?)?;
    Ok(())
}

/// Solves `cfg`, running the continuation when it carries an ε sequence, and
/// writes `profile.csv`, `trace.csv`, `report.json` and `config.json` (the
/// configuration of the returned profile) into `out`.
pub fn cmd_solve(cfg: &SolveConfig, out: &Path) -> Result<Status> {
    fs::create_dir_all(out)?;
    let (profile, mut report, trace, step_cfg, op) = match cfg.eps_sequence.as_deref() {
        Some(seq) if cfg.q > 1.0 => {
            let op = Arc::new(IntegralOperator::new(Arc::new(cfg.grid.build()?), cfg.kernel_variant));
            let steps = continuation_with_operator(cfg, seq, op.clone())?;
            let reports: Vec<&SolutionReport> = steps.iter().map(|s| &s.report).collect();
            write_json(&out.join("continuation.json"), &reports)?;
            let last = steps.into_iter().last().expect("eps sequence is not empty");
            let step_cfg = cfg.with_eps(last.eps);
            (last.profile, last.report, last.trace, step_cfg, op)
        }
        _ => {
            let solver = FixedPointSolver::new(final_config(cfg))?;
            let o = solver.solve(None);
            (
                o.profile,
                o.report,
                o.trace,
                solver.config().clone(),
                solver.operator().clone(),
            )
        }
    };
    if report.converged {
        diagnose(&profile, &step_cfg, Some(&op), &DiagnoseOptions::default(), &mut report);
    }
    profile.write_csv(create(&out.join("profile.csv"))?)?;
    write_trace_csv(&trace, create(&out.join("trace.csv"))?)?;
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("config.json"), &step_cfg)?;
    if let Some(why) = &report.diverged {
        eprintln!("diverged: {why}");
    }
    Ok(if report.converged { Status::Ok } else { Status::Diverged })
}

/// Runs every applicable residual check on `u = v + P` with `v` read from
/// `profile_path`, writing `verify.json` into `out`.
pub fn cmd_verify(profile_path: &Path, cfg: &SolveConfig, out: &Path) -> Result<Status> {
    let cfg = final_config(cfg);
    let grid = Arc::new(cfg.grid.build()?);
    let file = File::open(profile_path).map_err(|source| CliError::Read {
        path: profile_path.into(),
        source,
    })?;
    let v = Profile::read_csv(grid, file)?;
    verify_u(&v.plus_polynomial(&cfg.poly), &cfg, out)
}

/// Verifies the closed-form `q = 7` solution on the `exact-q7` preset grid.
pub fn cmd_verify_exact_q7(out: &Path) -> Result<Status> {
    let cfg = preset("exact-q7")?.config;
    let u = Profile::from_fn(Arc::new(cfg.grid.build()?), exact_q7);
    verify_u(&u, &cfg, out)
}

fn verify_u(u: &Profile, cfg: &SolveConfig, out: &Path) -> Result<Status> {
    fs::create_dir_all(out)?;
    let fit_offset = cfg.kernel_variant == KernelVariant::Shifted;
    let report = verify_profile(u, cfg.q, &cfg.poly, fit_offset, &Thresholds::default(), cfg.seed);
    write_json(&out.join("verify.json"), &report)?;
    for c in &report.checks {
        let value = c.value.map_or(String::new(), |v| format!(" {v:.3e}"));
        eprintln!("{:<18} {}{value}", c.name, c.status);
    }
    Ok(if report.passed {
        Status::Ok
    } else {
        Status::ChecksFailed
    })
}

/// What `shoot` integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShootMode {
    /// A single trajectory with the given `w(0)`.
    Single { w0: f64 },
    /// Bisection for the growth threshold in `w(0)`.
    Bisect,
    /// Initial data of the closed-form `q = 7` solution.
    ExactStart,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootSummary {
    pub q: f64,
    pub u0: f64,
    pub w0: f64,
    pub r_max: f64,
    pub r_end: f64,
    pub outcome: Outcome,
    pub fits: Vec<GrowthFit>,
    pub w0_critical: Option<f64>,
    pub predicted_exponent: Option<f64>,
    pub coefficient: Option<f64>,
    /// Largest `|u/u_exact − 1|` on the trajectory, for the exact start.
    pub max_rel_deviation: Option<f64>,
}

/// Shoots from the origin and writes `trajectory.csv` and `shoot.json`.
pub fn cmd_shoot(q: f64, u0: f64, mode: ShootMode, r_max: f64, out: &Path) -> Result<Status> {
    if !(q > 0.0) || !(u0 > 0.0) || !(r_max > 0.0) {
        return Err(CliError::Usage(format!(
            "need q > 0, u0 > 0, r_max > 0; got q={q}, u0={u0}, r_max={r_max}"
        )));
    }
    fs::create_dir_all(out)?;
    let mut summary = ShootSummary {
        q,
        u0,
        w0: f64::NAN,
        r_max,
        r_end: 0.0,
        outcome: Outcome::Reached,
        fits: Vec::new(),
        w0_critical: None,
        predicted_exponent: None,
        coefficient: None,
        max_rel_deviation: None,
    };
    let traj: Trajectory = match mode {
        ShootMode::Single { w0 } => integrate_radial(q, u0, w0, r_max),
        ShootMode::ExactStart => {
            if q != 7.0 {
                return Err(CliError::Usage(format!("--exact-start needs q = 7, got {q}")));
            }
            summary.u0 = exact_q7_a().sqrt();
            let t = integrate_radial(q, summary.u0, exact_q7_laplacian(0.0), r_max);
            let dev = t
                .states
                .iter()
                .map(|s| (s.u / exact_q7_radial(s.r) - 1.0).abs())
                .fold(0.0, f64::max);
            summary.max_rel_deviation = Some(dev);
            t
        }
        ShootMode::Bisect => {
            let th = bisect_growth_threshold(q, u0, r_max)?;
            summary.w0_critical = Some(th.w0_critical);
            summary.predicted_exponent = Some(th.predicted_exponent);
            summary.coefficient = Some(th.coefficient);
            th.trajectory
        }
    };
    summary.w0 = traj.w0;
    summary.r_end = traj.r_end();
    summary.outcome = traj.outcome;
    if traj.outcome == Outcome::Reached {
        let models = [GrowthModel::Power, GrowthModel::Linear, GrowthModel::Quadratic];
        summary.fits = models.into_iter().filter_map(|m| traj.tail_fit(m).ok()).collect();
    }
    traj.write_csv(create(&out.join("trajectory.csv"))?)?;
    write_json(&out.join("shoot.json"), &summary)?;
    Ok(Status::Ok)
}

/// Base configuration of a sweep: inline or a preset name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepBase {
    Preset(String),
    Config(Box<SolveConfig>),
}

/// Cartesian grid over `(q, κ₁, κ₂, ε)`. Each point solves with
/// `P = c + κ₁x₁² + κ₂(x₂² + x₃²) + ε|x|⁴` on the base grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: SweepBase,
    pub q: Vec<f64>,
    pub kappa1: Vec<f64>,
    pub kappa2: Vec<f64>,
    pub eps: Vec<f64>,
}

impl SweepConfig {
    pub fn base_config(&self) -> Result<SolveConfig> {
        match &self.base {
            SweepBase::Preset(name) => Ok(preset(name)?.config),
            SweepBase::Config(c) => Ok((**c).clone()),
        }
    }

    /// Parameter tuples in lexicographic order.
    pub fn points(&self) -> Vec<[f64; 4]> {
        let mut pts = Vec::new();
        for &q in &self.q {
            for &k1 in &self.kappa1 {
                for &k2 in &self.kappa2 {
                    for &e in &self.eps {
                        pts.push([q, k1, k2, e]);
                    }
                }
            }
        }
        pts.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        pts
    }
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.into(),
        source,
    })
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub q: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eps: f64,
    pub converged: bool,
    pub iters: usize,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub exp_e1: Option<f64>,
    pub exp_e2: Option<f64>,
    /// `converged`, `diverged` or `error`, with the reason after a colon.
    pub status: String,
}

fn sweep_point(base: &SolveConfig, [q, k1, k2, eps]: [f64; 4]) -> (SweepRow, Option<SolutionReport>) {
    let mut row = SweepRow {
        q,
        kappa1: k1,
        kappa2: k2,
        eps,
        converged: false,
        iters: 0,
        beta: None,
        alpha: None,
        exp_e1: None,
        exp_e2: None,
        status: String::new(),
    };
    let mut cfg = base.clone();
    cfg.q = q;
    cfg.poly = QuadraticPolynomial::new([k1, k2, k2], [0.0; 3], base.poly.c, eps);
    cfg.eps_sequence = None;
    let solver = match FixedPointSolver::new(cfg) {
        Ok(s) => s,
        Err(e) => {
            row.status = format!("error: {e}");
            return (row, None);
        }
    };
    let o = solver.solve(None);
    let mut report = o.report;
    if report.converged {
        let opts = DiagnoseOptions {
            residuals: false,
            decomposition: false,
            hessian: false,
        };
        diagnose(&o.profile, solver.config(), Some(solver.operator()), &opts, &mut report);
        let mut p0 = solver.config().poly;
        p0.eps_quartic = 0.0;
        let u = o.profile.plus_polynomial(&p0);
        let dirs = principal_directions(u.grid());
        let exp = |d: [f64; 3]| fit_growth(&u, d, GrowthModel::Power).ok().map(|f| f.exponent);
        row.exp_e1 = exp(dirs[0]);
        row.exp_e2 = exp(*dirs.last().expect("at least one direction"));
        row.status = "converged".into();
    } else {
        row.status = format!(
            "diverged: {}",
            report.diverged.clone().unwrap_or_else(|| "no convergence".into())
        );
    }
    row.converged = report.converged;
    row.iters = report.iters;
    row.beta = report.beta;
    row.alpha = report.alpha;
    (row, Some(report))
}

/// Solves every point of the sweep in parallel and writes `sweep.csv` plus
/// `points/NNNN.json` per point. Failed points are recorded, never fatal.
pub fn cmd_sweep(sweep: &SweepConfig, out: &Path) -> Result<Status> {
    let base = sweep.base_config()?;
    let points = sweep.points();
    fs::create_dir_all(out.join("points"))?;
    let results: Vec<(SweepRow, Option<SolutionReport>)> = points.par_iter().map(|&p| sweep_point(&base, p)).collect();
    let mut wr = csv::Writer::from_writer(create(&out.join("sweep.csv"))?);
    wr.write_record([
        "q",
        "kappa1",
        "kappa2",
        "eps",
        "converged",
        "iters",
        "beta",
        "alpha",
        "exp_e1",
        "exp_e2",
        "status",
    ])?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for (i, (row, report)) in results.iter().enumerate() {
        wr.write_record([
            row.q.to_string(),
            row.kappa1.to_string(),
            row.kappa2.to_string(),
            row.eps.to_string(),
            row.converged.to_string(),
            row.iters.to_string(),
            opt(row.beta),
            opt(row.alpha),
            opt(row.exp_e1),
            opt(row.exp_e2),
            row.status.clone(),
        ])?;
        if let Some(r) = report {
            write_json(&out.join("points").join(format!("{i:04}.json")), r)?;
        }
    }
    wr.flush()?;
    Ok(Status::Ok)
}
