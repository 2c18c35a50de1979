//! Command-line front end. Exit codes: 0 success, 1 invalid configuration
//! or runtime error, 2 suite ran but a check failed.

use super::config::{ConfigFile, ExperimentConfig, ExperimentKind, OutputFormat};
use super::suites::run_suite;
use crate::error::{Error, Result};
use crate::fgn::{make_kernels, NoisePair};
use crate::fraccalc::Grid;
use crate::infer::{mle, sequential_mle, write_estimates_csv, EstimateRecord, SequentialPlan};
use crate::reflect::simulate_rfou;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug, Parser)]
#[command(name = "rfou", version, about = "Reflected fractional OU simulation and drift estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one reflected path and dump `t,X,L,WH`.
    Simulate(Shared),
    /// Simulate one path and compute the fixed-horizon MLE.
    Estimate(Shared),
    /// Run one sequential plan.
    Sequential(Shared),
    /// Run a Monte Carlo suite.
    Suite {
        /// consistency, normality, sequential or girsanov
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Compare scaled queue lengths with the reflected process.
    QueueDemo(Shared),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Shared {
    #[arg(long)]
    pub hurst: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub barrier: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub h_level: Option<f64>,
    #[arg(long)]
    pub max_horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// TOML (or .json) file with the same keys as the flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Shared {
    fn resolve(&self, kind: Option<&str>, default: ExperimentKind) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            kind: kind.map(str::parse).transpose()?,
            hurst: self.hurst,
            alpha: self.alpha,
            sigma: self.sigma,
            barrier: self.barrier,
            x0: self.x0,
            horizon: self.horizon,
            steps: self.steps,
            reps: self.reps,
            h_level: self.h_level,
            max_horizon: self.max_horizon,
            seed: self.seed,
            out: self.out.clone(),
            format: self.format.as_deref().map(str::parse).transpose()?,
        };
        file.overlay(flags).resolve(default)
    }
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn json<W: Write, T: serde::Serialize>(mut out: W, v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}

fn write_record(cfg: &ExperimentConfig, rec: EstimateRecord) -> Result<()> {
    let mut out = sink(cfg)?;
    match cfg.format {
        OutputFormat::Csv => write_estimates_csv(&[rec], &mut out)?,
        OutputFormat::Json => json(&mut out, &serde_json::json!({ "config": cfg, "estimate": rec }))?,
    }
    out.flush()?;
    Ok(())
}

fn execute(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Simulate(sh) | Command::Estimate(sh) => {
            let cfg = sh.resolve(None, ExperimentKind::Consistency)?;
            let grid = Grid::new(cfg.horizon, cfg.steps)?;
            let kernels = Arc::new(make_kernels(cfg.model.hurst, grid)?);
            let path = simulate_rfou(&cfg.model, &NoisePair::sample(&kernels, cfg.seed))?;
            if matches!(cmd, Command::Estimate(_)) {
                write_record(&cfg, mle(&path, &kernels, Some(cfg.model.alpha))?)?;
                return Ok(Outcome::Done);
            }
            let mut out = sink(&cfg)?;
            match cfg.format {
                OutputFormat::Csv => path.write_csv(&mut out)?,
                OutputFormat::Json => json(
                    &mut out,
                    &serde_json::json!({
                        "config": cfg,
                        "t": grid.nodes(),
                        "X": path.x.values(),
                        "L": path.l.values(),
                        "WH": path.noise.fbm.values(),
                    }),
                )?,
            }
            out.flush()?;
            Ok(Outcome::Done)
        }
        Command::Sequential(sh) => {
            let cfg = sh.resolve(None, ExperimentKind::Sequential)?;
            let plan = SequentialPlan {
                h: cfg.h_level.expect("validated"),
                dt: cfg.dt(),
                max_horizon: cfg.max_horizon.expect("validated"),
                initial_horizon: cfg.horizon,
            };
            plan.validate()?;
            write_record(&cfg, sequential_mle(&cfg.model, &plan, cfg.seed)?)?;
            Ok(Outcome::Done)
        }
        Command::Suite { kind, shared } => {
            let cfg = shared.resolve(kind.as_deref(), ExperimentKind::Consistency)?;
            finish_report(&cfg)
        }
        Command::QueueDemo(sh) => {
            let cfg = sh.resolve(Some("queue-demo"), ExperimentKind::QueueDemo)?;
            finish_report(&cfg)
        }
    }
}

fn finish_report(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rep = run_suite(cfg)?;
    let mut out = sink(cfg)?;
    match cfg.format {
        OutputFormat::Csv => rep.write_csv(&mut out)?,
        OutputFormat::Json => rep.write_json(&mut out)?,
    }
    out.flush()?;
    for c in &rep.checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if rep.passed() { Outcome::Done } else { Outcome::ChecksFailed })
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::ChecksFailed) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
