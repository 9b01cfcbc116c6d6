//! Command-line front end: configuration, orchestration and artifact output.
//!
//! Each subcommand writes `report.json` (deterministic given config and seed),
//! its CSV tables and `metadata.json` (timestamps and provenance) into the
//! output directory. On failure `failure.json` replaces `report.json`.
//!
//! Exit codes: `0` all verdicts pass, `1` a verdict failed or the run
//! errored, `2` usage or configuration error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

pub use commands::{default_checkpoints, default_lambdas, formula_table, FormulaRow, Outcome};
pub use config::{CbbmSettings, ExperimentConfig, GrowthMode};

use crate::error::{KppError, Result};
use crate::output;
use crate::randomness::{seed_from_env, StreamKey};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kpp", version, about = "Jump-driven Fisher-KPP and coordinated BBM laboratory")]
pub struct Cli {
    /// JSON experiment configuration; defaults apply to omitted fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides KPP_SEED and the config file.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "DIR", default_value = "kpp-out")]
    pub out: PathBuf,
    /// Replica (or seed) count; overrides the config file.
    #[arg(long, global = true, value_name = "N")]
    pub replicas: Option<usize>,
    /// Suppress console output.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate the closed-form rates, speeds and bounds of the measure.
    Formulas,
    /// Solve the jump-driven FKPP and fit the front speed.
    Spde,
    /// Simulate the coordinated BBM on one skeleton.
    Cbbm,
    /// Quenched or annealed growth rate of the particle count.
    Growth,
    /// Compare both sides of the conditional moment duality.
    Duality,
    /// Tail of the rightmost particle against the many-to-one bound.
    Tailbound,
    /// Law of large numbers for the skeleton log-sum.
    Lln,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Formulas => "formulas",
            Command::Spde => "spde",
            Command::Cbbm => "cbbm",
            Command::Growth => "growth",
            Command::Duality => "duality",
            Command::Tailbound => "tailbound",
            Command::Lln => "lln",
        }
    }
}

/// Where the master seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Flag,
    Env,
    Config,
}

/// Flag beats `KPP_SEED`, which beats the config file.
pub fn resolve_seed(flag: Option<u64>, env: Option<u64>, config: u64) -> (u64, SeedSource) {
    match (flag, env) {
        (Some(s), _) => (s, SeedSource::Flag),
        (None, Some(s)) => (s, SeedSource::Env),
        (None, None) => (config, SeedSource::Config),
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    run(&cli)
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, u64, SeedSource)> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p).map_err(|e| match e {
            KppError::Io(io) => KppError::Config(vec![format!("cannot read {}: {io}", p.display())]),
            other => other,
        })?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = cli.replicas {
        cfg.replicas = n;
    }
    let env = seed_from_env().map_err(|e| KppError::Config(vec![e.to_string()]))?;
    let (seed, source) = resolve_seed(cli.seed, env, cfg.seed);
    cfg.seed = seed;
    cfg.validate()?;
    Ok((cfg, seed, source))
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> i32 {
    let started = SystemTime::now();
    let clock = Instant::now();
    let name = cli.command.name();
    let (cfg, seed, source) = match load_config(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("kpp {name}: {e}");
            let _ = std::fs::create_dir_all(&cli.out).map(|_| write_failure(&cli.out, name, &e));
            return EXIT_USAGE;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("kpp {name}: cannot create {}: {e}", cli.out.display());
        return EXIT_FAIL;
    }
    let key = StreamKey::new(seed);
    let result = dispatch(cli.command, &cfg, &key, &cli.out, cli.quiet).and_then(|o| {
        output::write_json(
            &cli.out.join("report.json"),
            &json!({
                "command": name,
                "seed": seed,
                "pass": o.pass,
                "summary": o.summary,
                "report": o.report,
            }),
        )?;
        Ok(o)
    });
    let meta = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "seed_source": format!("{source:?}").to_lowercase(),
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(SystemTime::now()),
        "elapsed_seconds": clock.elapsed().as_secs_f64(),
        "config": serde_json::to_value(&cfg).unwrap_or_default(),
    });
    let _ = output::write_json(&cli.out.join("metadata.json"), &meta);
    match result {
        Ok(o) => {
            if !cli.quiet {
                println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
            }
            if o.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("kpp {name}: {e}");
            write_failure(&cli.out, name, &e);
            match e {
                KppError::Config(_) => EXIT_USAGE,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, key: &StreamKey, out: &Path, quiet: bool) -> Result<Outcome> {
    match cmd {
        Command::Formulas => commands::formulas(cfg, out, quiet),
        Command::Spde => commands::spde(cfg, key, out),
        Command::Cbbm => commands::cbbm_cmd(cfg, key, out),
        Command::Growth => commands::growth(cfg, key, out),
        Command::Duality => commands::duality(cfg, key, out),
        Command::Tailbound => commands::tailbound(cfg, key, out),
        Command::Lln => commands::lln(cfg, key, out),
    }
}

fn error_kind(e: &KppError) -> &'static str {
    match e {
        KppError::InvalidParameter { .. } => "invalid_parameter",
        KppError::InvalidMeasure(_) => "invalid_measure",
        KppError::ZeroMass => "zero_mass",
        KppError::InfeasibleBox { .. } => "infeasible_box",
        KppError::CapExceeded { .. } => "cap_exceeded",
        KppError::CountsOnly => "counts_only",
        KppError::TooFewSamples { .. } => "too_few_samples",
        KppError::MissingFront(_) => "missing_front",
        KppError::Config(_) => "config",
        KppError::Io(_) => "io",
        KppError::Json(_) => "json",
        KppError::Csv(_) => "csv",
    }
}

fn write_failure(out: &Path, command: &str, e: &KppError) {
    let details = match e {
        KppError::Config(v) => json!(v),
        _ => json!(null),
    };
    let _ = output::write_json(
        &out.join("failure.json"),
        &json!({
            "command": command,
            "kind": error_kind(e),
            "message": e.to_string(),
            "details": details,
        }),
    );
    let _ = std::fs::remove_file(out.join("report.json"));
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}
