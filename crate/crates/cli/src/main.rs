use std::path::PathBuf;
use std::process::ExitCode;

use biharm_cli::{
    cmd_shoot, cmd_solve, cmd_sweep, cmd_verify, cmd_verify_exact_q7, exit_code, load_config, load_sweep, CliError,
    ConfigSource, Result, ShootMode, Status,
};
use biharm_core::model::SolveConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "biharm", version, about = "Entire solutions of Δ²u + u^-q = 0 in R^3")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "BIHARM_OUT", default_value = "out")]
    out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration JSON (a bare config or a preset document).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: thm1, thm2, thmA-iii, thmA-iv, exact-q7.
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigArgs {
    fn source(&self) -> Option<ConfigSource> {
        match (&self.config, &self.preset) {
            (Some(p), _) => Some(ConfigSource::File(p.clone())),
            (None, Some(n)) => Some(ConfigSource::Preset(n.clone())),
            (None, None) => None,
        }
    }

    fn load(&self, seed: Option<u64>) -> Result<SolveConfig> {
        let src = self
            .source()
            .ok_or_else(|| CliError::Usage("give --config or --preset".into()))?;
        let mut cfg = load_config(&src)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the fixed-point problem, with ε-continuation if configured.
    Solve(ConfigArgs),
    /// Check the residuals of a solved profile.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Profile CSV of v, as written by `solve`.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Check the closed-form q = 7 solution instead.
        #[arg(long, conflicts_with_all = ["profile", "config", "preset"])]
        exact_q7: bool,
    },
    /// Integrate the radial ODE from the origin.
    Shoot {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        u0: f64,
        /// Δu(0) for a single trajectory.
        #[arg(long, conflicts_with_all = ["bisect", "exact_start"])]
        w0: Option<f64>,
        /// Bisect on Δu(0) for the growth threshold.
        #[arg(long, conflicts_with = "exact_start")]
        bisect: bool,
        /// Start from the closed-form q = 7 solution.
        #[arg(long)]
        exact_start: bool,
        /// Outer radius (default 1e4 for --bisect, 10 for --exact-start, 100 otherwise).
        #[arg(long)]
        r_max: Option<f64>,
    },
    /// Solve a parameter grid and aggregate the results.
    Sweep {
        /// Sweep JSON.
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    match cli.command {
        Command::Solve(c) => cmd_solve(&c.load(cli.seed)?, &cli.out),
        Command::Verify { exact_q7: true, .. } => cmd_verify_exact_q7(&cli.out),
        Command::Verify { config, profile, .. } => {
            let profile = profile.ok_or_else(|| CliError::Usage("give --profile or --exact-q7".into()))?;
            cmd_verify(&profile, &config.load(cli.seed)?, &cli.out)
        }
        Command::Shoot {
            q,
            u0,
            w0,
            bisect,
            exact_start,
            r_max,
        } => {
            let (mode, default_r) = match (w0, bisect, exact_start) {
                (_, true, _) => (ShootMode::Bisect, 1e4),
                (_, _, true) => (ShootMode::ExactStart, 10.0),
                (Some(w0), _, _) => (ShootMode::Single { w0 }, 100.0),
                (None, false, false) => return Err(CliError::Usage("give --w0, --bisect or --exact-start".into())),
            };
            cmd_shoot(q, u0, mode, r_max.unwrap_or(default_r), &cli.out)
        }
        Command::Sweep { config } => cmd_sweep(&load_sweep(&config)?, &cli.out),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1; clap's own 2 is reserved for divergence.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(exit_code(&run(cli)) as u8)
}
