//! `lqgduet` command-line front end.
//!
//! Every CSV artifact starts with `#` comment lines: the subcommand and the
//! full resolved [`RunConfig`] as JSON, so a file can be re-run with
//! `--config`. Column schemas are listed on each row type in [`commands`].

use clap::{Args, Parser, Subcommand, ValueEnum};
use lqgduet_core::ProblemParams;
use lqgduet_strategies::StrategySpec;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub mod commands;

pub const SEED_ENV: &str = "LQGDUET_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Failed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

pub(crate) fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "lqgduet", version, about = "Two-controller LQG bounds, simulation and certification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// Run configuration as JSON (instead of a subcommand)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// RNG seed; LQGDUET_SEED overrides it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Emit JSON instead of CSV / text
    #[arg(long, global = true)]
    pub json: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    #[serde(default = "one")]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub r2: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub sigma0sq: f64,
    #[arg(long, default_value_t = 0.0)]
    #[serde(default)]
    pub sv1sq: f64,
    /// Defaults to sv1sq
    #[arg(long)]
    #[serde(default)]
    pub sv2sq: Option<f64>,
}

impl ParamArgs {
    pub fn to_params(&self) -> Result<ProblemParams, CliError> {
        let p = ProblemParams {
            a: self.a,
            q: self.q,
            r1: self.r1,
            r2: self.r2,
            sigma0_sq: self.sigma0sq,
            sigmav1_sq: self.sv1sq,
            sigmav2_sq: self.sv2sq.unwrap_or(self.sv1sq),
        };
        p.validate().map_err(config_err)?;
        Ok(p)
    }
}

/// Parse `linbb1`, `sig:1:0.5`, ... or a JSON object such as
/// `{"type":"sig","s":1,"d":0.5}`.
pub fn parse_strategy(s: &str) -> Result<StrategySpec, String> {
    let spec: StrategySpec = if s.trim_start().starts_with('{') {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de).map_err(|e| format!("strategy at `{}`: {}", e.path(), e.inner()))?
    } else {
        s.parse().map_err(|e: lqgduet_strategies::StrategyError| e.to_string())?
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: StrategySpec,
    #[arg(long, default_value_t = 200_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,
    #[arg(long, default_value_t = 32)]
    pub trials: u32,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 100.0)]
    pub a: f64,
    #[arg(long, default_value_t = 100.0)]
    pub sv2sq: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub l_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub l_max: f64,
    #[arg(long, default_value_t = 81)]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BoundArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub params: ParamArgs,
    /// Also list the minimum of every envelope (lower only)
    #[arg(long)]
    #[serde(default)]
    pub audit: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeArg {
    Weak,
    Strong,
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[arg(long, value_enum, default_value_t = RegimeArg::Both)]
    pub regime: RegimeArg,
    /// Ratio cap for the selected regime(s); defaults 1200 weak, 1.5e5 strong
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2.5, 5.0, 25.0, 100.0])]
    pub a_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3])]
    pub s_values: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 10.0])]
    pub sv1_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0])]
    pub weak_fractions: Vec<f64>,
    /// Levels for each of q, r1, r2
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1.0, 1e2])]
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetStrategyArg {
    Optimal,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OneShotArg {
    Radner,
    Witsen,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetmodelArgs {
    #[arg(long, default_value_t = 2)]
    pub aprime: i32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub sv2_level: i32,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub p1_level: i32,
    #[arg(long, value_enum, default_value_t = DetStrategyArg::Optimal)]
    pub strategy: DetStrategyArg,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    /// Defaults to -aprime - 6
    #[arg(long, allow_negative_numbers = true)]
    pub window_lo: Option<i32>,
    /// Defaults to max(sv2-level, p1-level) + aprime + 13
    #[arg(long)]
    pub window_hi: Option<i32>,
    /// Run a one-shot model instead of the infinite-horizon one
    #[arg(long, value_enum)]
    pub oneshot: Option<OneShotArg>,
    /// Silence the first controller in the one-shot models
    #[arg(long)]
    #[serde(default)]
    pub no_u1: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Prop1Args {
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<f64>,
    /// Smallest admissible a (1e4 admits the linear-side range)
    #[arg(long, default_value_t = 2e4)]
    pub min_a: f64,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Monte Carlo run of one strategy
    Simulate(SimulateArgs),
    /// Upper/lower/linear costs along r1 = a^l
    Sweep(SweepArgs),
    /// Best achievable weighted cost
    Upper(BoundArgs),
    /// Converse bound on the weighted cost
    Lower(BoundArgs),
    /// Ratio certification on a sampled grid
    Certify(CertifyArgs),
    /// Binary deterministic model
    Detmodel(DetmodelArgs),
    /// Linear vs nonlinear cost gap table
    Prop1(Prop1Args),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Sweep(_) => "sweep",
            Command::Upper(_) => "upper",
            Command::Lower(_) => "lower",
            Command::Certify(_) => "certify",
            Command::Detmodel(_) => "detmodel",
            Command::Prop1(_) => "prop1",
        }
    }
}

/// Fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub json: bool,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(s);
        serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Build from parsed flags. `env_seed` is the value of `LQGDUET_SEED`.
    pub fn resolve(cli: Cli, env_seed: Option<String>) -> Result<Self, CliError> {
        let mut cfg = match (cli.command, &cli.config) {
            (Some(_), Some(_)) => return Err(CliError::Config("give either a subcommand or --config, not both".into())),
            (None, None) => return Err(CliError::Config("a subcommand or --config is required".into())),
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let mut c = RunConfig::from_json(&text)?;
                c.output = cli.output.or(c.output);
                c.seed = cli.seed.unwrap_or(c.seed);
                c.threads = cli.threads.or(c.threads);
                c.json |= cli.json;
                c
            }
            (Some(command), None) => RunConfig {
                command,
                output: cli.output,
                seed: cli.seed.unwrap_or(0),
                threads: cli.threads,
                json: cli.json,
            },
        };
        if let Some(s) = env_seed {
            cfg.seed = s.trim().parse().map_err(|e| CliError::Config(format!("{SEED_ENV}={s}: {e}")))?;
        }
        if let Some(out) = &cfg.output {
            let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !parent.is_dir() {
                return Err(CliError::Config(format!("output directory {} does not exist", parent.display())));
            }
        }
        Ok(cfg)
    }
}

/// Run `cfg`, writing the artifact to `out` and status lines to `diag`.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write, diag: &mut dyn Write) -> Result<(), CliError> {
    if let Some(n) = cfg.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cfg.command {
        Command::Simulate(a) => commands::simulate(cfg, a, out),
        Command::Sweep(a) => commands::sweep(cfg, a, out),
        Command::Upper(a) => commands::upper(cfg, a, out),
        Command::Lower(a) => commands::lower(cfg, a, out),
        Command::Certify(a) => commands::certify(cfg, a, out, diag),
        Command::Detmodel(a) => commands::detmodel(cfg, a, out),
        Command::Prop1(a) => commands::prop1(cfg, a, out, diag),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli(cli: Cli) -> i32 {
    let cfg = match RunConfig::resolve(cli, std::env::var(SEED_ENV).ok()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let result = match &cfg.output {
        Some(path) => match std::fs::File::create(path) {
            Ok(f) => {
                let mut w = std::io::BufWriter::new(f);
                let r = execute(&cfg, &mut w, &mut std::io::stdout());
                w.flush().map_err(CliError::from).and(r)
            }
            Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
        },
        None => execute(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
