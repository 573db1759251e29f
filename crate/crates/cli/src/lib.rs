//! `htrl` command-line front end: loads a run configuration, executes the
//! experiment on a sized thread pool and writes CSV tables plus a JSON
//! summary.
//!
//! Exit status: 0 on success, 1 when `--check` is set and a criterion
//! fails, 2 on usage or configuration errors.

// `!(x >= 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use config::{Command, RunConfig, Spec, Threads};
pub use experiments::run_experiment;
pub use output::{emit_summary, Criterion, Report, Summary, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Experiment(#[from] htrl::Error),
}

#[derive(Debug, Parser)]
#[command(name = "htrl", version, about = "Rate experiments for least squares under heavy-tailed errors")]
pub struct Args {
    /// Experiment to run; may be omitted when the config names it.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML run configuration; the built-in default is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, a count or `auto`.
    #[arg(long, env = "HTRL_THREADS")]
    pub threads: Option<Threads>,
    /// Exit 1 when any criterion fails.
    #[arg(long)]
    pub check: bool,
    /// `key=value` override of an existing config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub print_config: bool,
    /// Suppress progress and per-criterion output.
    #[arg(long, short)]
    pub quiet: bool,
}

/// Effective configuration for `args`. `--out` and `--threads` are execution
/// options: they never change results and are not folded into the config.
pub fn resolve_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path, &args.overrides)?,
        None => {
            let cmd = args.command.ok_or_else(|| CliError::Usage("name a command or pass --config".into()))?;
            RunConfig::parse_with_overrides(&RunConfig::default_for(cmd).to_toml(), &args.overrides)?
        }
    };
    if let Some(cmd) = args.command {
        if cmd != cfg.command() {
            return Err(CliError::Usage(format!("command {cmd} does not match config command {}", cfg.command())));
        }
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

pub fn thread_pool(threads: Threads) -> Result<rayon::ThreadPool, CliError> {
    let k = match threads {
        Threads::Auto => 0,
        Threads::Count(k) => k,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {k} threads: {e}")))
}

/// Runs `cfg` on a pool of `threads` workers and assembles the summary.
pub fn execute(cfg: &RunConfig, threads: Threads) -> Result<Summary, CliError> {
    let pool = thread_pool(threads)?;
    let report = pool.install(|| run_experiment(cfg))?;
    Ok(emit_summary(cfg.command().name(), cfg.to_toml(), report))
}

fn run_inner(args: &Args) -> Result<i32, CliError> {
    let cfg = resolve_config(args)?;
    if args.print_config {
        print!("{}", cfg.to_toml());
        return Ok(0);
    }
    let threads = args.threads.unwrap_or(cfg.threads);
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    if !args.quiet {
        eprintln!("htrl: running {} (seed {})", cfg.command(), cfg.seed);
    }
    let summary = execute(&cfg, threads)?;
    let written = summary.write(&out)?;
    let all = summary.criteria.iter().all(|c| c.pass);
    if args.quiet {
        return Ok(if args.check && !all { 1 } else { 0 });
    }
    for path in written {
        eprintln!("htrl: wrote {}", path.display());
    }
    for c in &summary.criteria {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!(
            "{} {}: measured {} target {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            fmt(c.measured),
            fmt(c.target)
        );
    }
    Ok(if args.check && !all { 1 } else { 0 })
}

/// Entry point for an argument vector that includes the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_inner(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("htrl: {e}");
            2
        }
    }
}
