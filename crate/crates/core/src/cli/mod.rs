//! Command-line experiment runner.
//!
//! Every command writes a CSV plus a `<stem>.manifest.json` holding the fully
//! resolved command; `rerun` replays a manifest and reproduces the CSV bytes.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ranking::CreditFunction;
use crate::simulator::Variant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "multileave", version, about = "Multileaving experiments and comparison service")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Accuracy versus the number of rankers.
    SweepRankers(SweepRankersArgs),
    /// Accuracy versus the ranking length.
    SweepLength(SweepLengthArgs),
    /// Normalized insensitivity over the ranker and length sweeps.
    Insensitivity(InsensitivityArgs),
    /// Distribution of the bias statistic over repeated constructions.
    Bias(BiasArgs),
    /// Accuracy, insensitivity and bias for several α values.
    AlphaStudy(AlphaArgs),
    /// p-value convergence of multileaving versus A/B testing on synthetic users.
    PvalueCompare(PvalueArgs),
    /// Run the comparison service.
    Serve(ServeArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

/// Flags shared by the simulation commands.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Comma-separated variants, e.g. TDM,GOM-I,GOM-P.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Variant>>,
    /// Credit function for statistics of non-GOM methods.
    #[arg(long, default_value = "personalization")]
    pub credit: CreditFunction,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long, default_value_t = 100)]
    pub numeval: usize,
    #[arg(long, default_value_t = 100)]
    pub numclick: usize,
    /// Clicks come from the top x% of the preferred ranking.
    #[arg(long, default_value_t = 80.0)]
    pub click_bias: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepRankersArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    #[arg(long, default_value_t = 10)]
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepLengthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 5)]
    pub l_min: usize,
    #[arg(long, default_value_t = 195)]
    pub l_max: usize,
    #[arg(long, default_value_t = 10)]
    pub length_step: usize,
    #[arg(long, default_value_t = 3)]
    pub rankers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rankers,
    Length,
    Both,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InsensitivityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "both")]
    pub over: SweepAxis,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    #[arg(long, default_value_t = 5)]
    pub l_min: usize,
    #[arg(long, default_value_t = 195)]
    pub l_max: usize,
    #[arg(long, default_value_t = 10)]
    pub length_step: usize,
    /// Give every ranker the same input ranking.
    #[arg(long)]
    pub identical_inputs: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BiasArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 10_000)]
    pub generations: usize,
    #[arg(long, default_value_t = 3)]
    pub rankers: usize,
    #[arg(long, default_value_t = 10)]
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AlphaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_value = "0,1,1000")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub rankers: usize,
    #[arg(long, default_value_t = 10)]
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PvalueArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20_000)]
    pub users: usize,
    #[arg(long, default_value_t = 5)]
    pub algorithms: usize,
    #[arg(long, default_value_t = 0.1)]
    pub effect: f64,
    #[arg(long, default_value_t = 1.0)]
    pub heterogeneity: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 1.5)]
    pub activity_shape: f64,
    /// Arm that preferentially receives inactive users in the A/B split.
    #[arg(long)]
    pub group_bias: Option<usize>,
    /// Bootstrap replicates per user count.
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,
    #[arg(long, value_delimiter = ',')]
    pub user_counts: Option<Vec<usize>>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ServeArgs {
    #[arg(long, env = "MULTILEAVE_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: std::net::SocketAddr,
    #[arg(long, env = "MULTILEAVE_LOG_PATH")]
    pub log_path: Option<PathBuf>,
    #[arg(long, env = "MULTILEAVE_METHOD", default_value = "gom")]
    pub default_method: crate::multileaver::Method,
    #[arg(long, env = "MULTILEAVE_CREDIT", default_value = "personalization")]
    pub default_credit: CreditFunction,
    #[arg(long, default_value_t = 10)]
    pub candidates: usize,
    #[arg(long, env = "MULTILEAVE_SESSION_TTL", default_value_t = 86_400)]
    pub session_ttl_secs: u64,
    #[arg(long, env = "MULTILEAVE_TOKEN")]
    #[serde(skip)]
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Reproducibility record written next to every CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub command: Command,
    /// Resolved simulation parameters, when the command simulates clicks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub seed: u64,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_secs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub manifest_path: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SweepRankers(_) => "sweep-rankers",
            Command::SweepLength(_) => "sweep-length",
            Command::Insensitivity(_) => "insensitivity",
            Command::Bias(_) => "bias",
            Command::AlphaStudy(_) => "alpha-study",
            Command::PvalueCompare(_) => "pvalue-compare",
            Command::Serve(_) => "serve",
            Command::Rerun(_) => "rerun",
        }
    }

    fn threads(&self) -> Option<usize> {
        match self {
            Command::SweepRankers(a) => a.common.threads,
            Command::SweepLength(a) => a.common.threads,
            Command::Insensitivity(a) => a.common.threads,
            Command::Bias(a) => a.common.threads,
            Command::AlphaStudy(a) => a.common.threads,
            Command::PvalueCompare(a) => a.threads,
            Command::Serve(_) | Command::Rerun(_) => None,
        }
    }

    fn set_out(&mut self, dir: PathBuf) {
        match self {
            Command::SweepRankers(a) => a.common.out = dir,
            Command::SweepLength(a) => a.common.out = dir,
            Command::Insensitivity(a) => a.common.out = dir,
            Command::Bias(a) => a.common.out = dir,
            Command::AlphaStudy(a) => a.common.out = dir,
            Command::PvalueCompare(a) => a.out = dir,
            Command::Serve(_) | Command::Rerun(_) => {}
        }
    }
}

/// Runs `command`, honouring its thread count.
pub fn run(command: Command) -> Result<Report, CliError> {
    let threads = command.threads();
    if threads == Some(0) {
        return usage("--threads must be at least 1");
    }
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
            pool.install(|| dispatch(command))
        }
        None => dispatch(command),
    }
}

fn dispatch(command: Command) -> Result<Report, CliError> {
    let start = Instant::now();
    let done = match &command {
        Command::SweepRankers(a) => commands::sweep_rankers(a)?,
        Command::SweepLength(a) => commands::sweep_length(a)?,
        Command::Insensitivity(a) => commands::insensitivity(a)?,
        Command::Bias(a) => commands::bias(a)?,
        Command::AlphaStudy(a) => commands::alpha_study(a)?,
        Command::PvalueCompare(a) => commands::pvalue_compare(a)?,
        Command::Serve(a) => {
            commands::serve(a)?;
            return Ok(Report { manifest_path: None, outputs: Vec::new() });
        }
        Command::Rerun(a) => return rerun(a),
    };
    let manifest = RunManifest {
        subcommand: command.name().to_string(),
        seed: done.seed,
        config: done.config,
        outputs: done.outputs.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs: start.elapsed().as_secs_f64(),
        summary: done.summary,
        command,
    };
    let path = done.dir.join(format!("{}.manifest.json", done.stem));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).map_err(Error::from)? + "\n").map_err(Error::from)?;
    Ok(Report { manifest_path: Some(path), outputs: done.outputs })
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot read {}: {e}", path.display()))))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
}

fn rerun(args: &RerunArgs) -> Result<Report, CliError> {
    let mut command = read_manifest(&args.manifest)?.command;
    if matches!(command, Command::Serve(_) | Command::Rerun(_)) {
        return usage("manifest does not describe an experiment");
    }
    if let Some(dir) = &args.out {
        command.set_out(dir.clone());
    }
    run(command)
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(report) => {
            for p in &report.outputs {
                println!("wrote {}", p.display());
            }
            if let Some(m) = &report.manifest_path {
                println!("wrote {}", m.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
