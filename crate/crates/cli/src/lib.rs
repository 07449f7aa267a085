//! Batch front end: reads a flat config, runs an experiment and writes CSV
//! tables next to a `run.meta` file that reproduces them.

pub mod config;
pub mod output;
pub mod selftest;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use avsdf_core::{crb_closed, run_doa_sweep, run_tracking_experiment};
use clap::{Args, Parser, Subcommand};

use config::{ConfigError, CrbSettings, RawConfig, SweepSettings, TrackSettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Domain(#[from] avsdf_core::Error),
    #[error("refusing to overwrite {}; pass --force", .0.display())]
    Overwrite(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("selftest failed")]
    SelftestFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 1,
            Self::Domain(_) | Self::SelftestFailed => 2,
            Self::Overwrite(_) => 3,
            Self::Io { .. } => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "avsdf",
    version,
    about = "Vector-sensor direction finding for polynomial-phase signals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo bias/std of the DOA estimate over an SNR grid.
    DoaSweep(RunArgs),
    /// Forgetting-factor tracking of a moving source.
    Track(RunArgs),
    /// Print the closed-form DOA bounds.
    Crb(RunArgs),
    /// Run built-in consistency checks.
    Selftest(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file in key=value format.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
    /// Overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads, 0 for all cores. Never changes results.
    #[arg(long, env = "AVSDF_THREADS", default_value_t = 0)]
    pub threads: usize,
    /// `key=value` overrides applied after the config file.
    pub overrides: Vec<String>,
}

fn load_raw(args: &RunArgs) -> Result<RawConfig, CliError> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    raw.apply_overrides(&args.overrides)?;
    if let Some(seed) = args.seed {
        raw.set("seed", seed.to_string());
    }
    Ok(raw)
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))
}

fn meta(command: &str, echo: &str) -> String {
    format!(
        "# avsdf {}\n# command: {command}\n# rerun: avsdf {command} --config run.meta\n{echo}",
        env!("CARGO_PKG_VERSION")
    )
}

pub fn cmd_doa_sweep(args: &RunArgs, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let settings = SweepSettings::from_raw(&load_raw(args)?)?;
    let rows = thread_pool(args.threads)?.install(|| run_doa_sweep(&settings.sweep))?;
    let files = [
        ("doa_sweep.csv", output::sweep_csv(&rows)),
        ("run.meta", meta("doa-sweep", &settings.echo())),
    ];
    let written = output::write_all(&args.out, &files, args.force)?;
    let failed: usize = rows.iter().map(|r| r.failed_trials).sum();
    let _ = writeln!(
        log,
        "wrote {} SNR points ({failed} failed trials) to {}",
        rows.len(),
        written[0].display()
    );
    Ok(())
}

pub fn cmd_track(args: &RunArgs, log: &mut dyn std::io::Write) -> Result<(), CliError> {
    let settings = TrackSettings::from_raw(&load_raw(args)?)?;
    let result =
        thread_pool(args.threads)?.install(|| run_tracking_experiment(&settings.experiment))?;
    let files = [
        ("track_trace.csv", output::trace_csv(&result)),
        ("track_stats.csv", output::stats_csv(&result.stats)),
        ("run.meta", meta("track", &settings.echo())),
    ];
    let written = output::write_all(&args.out, &files, args.force)?;
    let _ = writeln!(
        log,
        "wrote {} tracker runs to {} and {}",
        result.stats.len(),
        written[0].display(),
        written[1].display()
    );
    Ok(())
}

pub fn cmd_crb(args: &RunArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let s = CrbSettings::from_raw(&load_raw(args)?)?;
    let c = crb_closed(s.alpha, s.snapshots, s.sigma2)?;
    let _ = writeln!(out, "crb_alpha_rad2={}", output::num(c.crb_alpha));
    let _ = writeln!(out, "crb_beta_rad2={}", output::num(c.crb_beta));
    let _ = writeln!(out, "crb_alpha_std_deg={}", output::num(c.alpha_std_deg()));
    let _ = writeln!(out, "crb_beta_std_deg={}", output::num(c.beta_std_deg()));
    Ok(())
}

pub fn cmd_selftest(args: &RunArgs, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let checks = thread_pool(args.threads)?.install(selftest::run_all);
    for c in &checks {
        let _ = writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(CliError::SelftestFailed)
    }
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut stdout = stdout.lock();
    let mut stderr = std::io::stderr();
    let result = match &cli.command {
        Command::DoaSweep(args) => cmd_doa_sweep(args, &mut stderr),
        Command::Track(args) => cmd_track(args, &mut stderr),
        Command::Crb(args) => cmd_crb(args, &mut stdout),
        Command::Selftest(args) => cmd_selftest(args, &mut stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
