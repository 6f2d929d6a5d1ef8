//! Experiment runner behind the `freeutil` binary.
//!
//! Each subcommand reads a TOML experiment config, runs every (alpha, seed) cell
//! and writes one CSV row per metric. See the README for the config grammar.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use freeutil::verify::Mutation;

pub use config::{parse_config, ExperimentConfig, Kind, LogBase};
pub use error::CliError;
pub use output::{summary, verify_report, write_csv};
pub use runner::{run, ResultRow, RunOptions, RunOutput};

/// Exit status when verification finds a violation.
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Exit status for configuration, input and solver errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "freeutil", version, about = "Free-utility solvers and experiment runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Soft-optimal control of a stationary interaction problem, swept over alpha.
    SolveControl(CommonArgs),
    /// Bayesian sequence prediction of a source drawn from a finite family.
    Estimate(CommonArgs),
    /// Bayesian control rule in a bandit or finite MDP.
    Bcr(CommonArgs),
    /// Generalized variational problem over a declared causal model.
    Gvp(CommonArgs),
    /// Seeded oracle suites; exits nonzero on any violation.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Temperature or comma-separated sweep, e.g. "0.001,0.1,1,10".
    #[arg(long)]
    pub alpha: Option<String>,
    /// Seed or comma-separated list of seeds.
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of interaction steps (or symbols, or control stages).
    #[arg(long)]
    pub horizon: Option<usize>,
    /// CSV destination; stdout when neither this nor `output` in the config is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base of reported information quantities.
    #[arg(long, value_parser = ["2", "e"])]
    pub log_base: Option<String>,
    /// Also print an aligned summary table.
    #[arg(long)]
    pub summary: bool,
    /// Worker threads for independent (alpha, seed) cells.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Override a config key, e.g. `--set bcr.sampling=posterior`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Record wall-clock time in the `wall_ms` column (otherwise 0, keeping output reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run only the named suite. Repeatable.
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    /// Deliberately corrupt a component to check the suites catch it.
    #[arg(long, value_parser = ["gibbs-normalizer"])]
    pub mutate: Option<String>,
}

impl Command {
    fn kind(&self) -> Kind {
        match self {
            Command::SolveControl(_) => Kind::Control,
            Command::Estimate(_) => Kind::Estimate,
            Command::Bcr(_) => Kind::Bcr,
            Command::Gvp(_) => Kind::Gvp,
            Command::Verify(_) => Kind::Verify,
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::SolveControl(c) | Command::Estimate(c) | Command::Bcr(c) | Command::Gvp(c) => c,
            Command::Verify(v) => &v.common,
        }
    }
}

fn load(kind: Kind, args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let overrides = args
        .set
        .iter()
        .map(|s| config::parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut config = match &args.config {
        Some(path) => parse_config(path, &overrides)?,
        None if kind == Kind::Verify => {
            let mut c = ExperimentConfig::empty(kind);
            if !overrides.is_empty() {
                c = ExperimentConfig::from_str_with_overrides("kind = \"verify\"\nid = \"verify\"\n", &overrides, "--set")?;
                c.base_dir = PathBuf::from(".");
            }
            c
        }
        None => return Err(CliError::Config(format!("`{kind}` needs --config <FILE>"))),
    };
    match config.kind {
        None => config.kind = Some(kind),
        Some(k) if k != kind => {
            return Err(CliError::Config(format!(
                "config declares kind `{k}` but the subcommand runs `{kind}`"
            )))
        }
        Some(_) => {}
    }
    Ok(config)
}

fn options(command: &Command) -> Result<RunOptions, CliError> {
    let args = command.common();
    let mut opts = RunOptions {
        alpha: None,
        seeds: args.seed.as_deref().map(|s| config::parse_list(s, "seed")).transpose()?,
        horizon: args.horizon,
        out: args.out.clone(),
        log_base: args.log_base.as_deref().map(str::parse).transpose()?,
        jobs: args.jobs,
        timing: args.timing,
        mutation: None,
        suites: Vec::new(),
    };
    if let Some(a) = &args.alpha {
        opts.alpha = Some(config::AlphaSpec::Text(a.clone()).values()?);
    }
    if let Some(seeds) = &opts.seeds {
        if seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
    }
    if args.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    if let Command::Verify(v) = command {
        opts.suites = v.suites.clone();
        opts.mutation = v
            .mutate
            .as_deref()
            .map(|m| m.parse::<Mutation>().map_err(CliError::Model))
            .transpose()?;
    }
    Ok(opts)
}

/// Runs a parsed command line. Returns the process exit status.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let kind = cli.command.kind();
    let args = cli.command.common();
    let config = load(kind, args)?;
    let opts = options(&cli.command)?;
    let result = run(&config, &opts)?;

    let destination = opts.out.clone().or_else(|| config.output.as_ref().map(|p| config.base_dir.join(p)));
    let csv_on_stdout = destination.is_none();
    match destination {
        Some(path) => {
            let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write_csv(&result.rows, &mut w, opts.timing)?;
            w.flush()?;
        }
        None => write_csv(&result.rows, &mut *stdout, opts.timing)?,
    }

    let report: &mut dyn Write = if csv_on_stdout { stderr } else { stdout };
    if kind == Kind::Verify {
        report.write_all(verify_report(&result.suites).as_bytes())?;
    } else if args.summary {
        report.write_all(summary(&result.rows).as_bytes())?;
    }
    Ok(if result.all_passed() { 0 } else { EXIT_VERIFY_FAILED })
}
