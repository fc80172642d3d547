//! `mrca`: command-line front end for the MRCA-age library.
//!
//! Data goes to stdout or `--out`, a short summary to stderr. Exit codes:
//! 0 success, 1 usage error, 2 numerical failure, 3 acceptance failure.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrca_core::numerics::{self, Settings};

use config::{FileConfig, Resolved, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "mrca", version, about = "Exact kernels, simulation and checks for the MRCA-age process")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON settings file (fields: measure, seed, parallel, tolerance_scale,
    /// abs_tol, max_depth, max_intervals); flags take precedence over it.
    #[arg(long, global = true, env = "MRCA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for path simulation; results are ordered by stream id
    /// whatever the count.
    #[arg(long, global = true)]
    pub parallel: Option<usize>,
    /// Multiplies numeric tolerances and runtime budgets of `accept`.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
    /// Lifetime measure as JSON, e.g. '{"type":"pareto","a":1,"p":2}'.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    /// Base seed; stream ids are 0, 1, 2, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Absolute tolerance of every quadrature.
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// Bisection depth limit of every quadrature.
    #[arg(long, global = true)]
    pub max_depth: Option<u32>,
    /// Interval budget of every quadrature.
    #[arg(long, global = true)]
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition kernel. CSV columns: x,t,y,density,atom,zero_mass.
    Kernel {
        /// Start states, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        /// Times, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Target states, comma separated; must lie in (0, x + t).
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<f64>,
    },
    /// Recurrence classification as JSON.
    Classify,
    /// Simulate paths. CSV columns: stream,time,peak,trough (one row per
    /// jump), or stream,value with --marginal.
    Simulate {
        /// Number of independent paths.
        #[arg(long, default_value_t = 1)]
        paths: u64,
        #[arg(long)]
        horizon: f64,
        /// Initial state; ignored with --stationary.
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// Start each path from the stationary law.
        #[arg(long)]
        stationary: bool,
        /// Zero-state resolution (default 1e-6 times the horizon).
        #[arg(long)]
        t0: Option<f64>,
        /// Emit A(t) at this time instead of the jumps.
        #[arg(long)]
        marginal: Option<f64>,
    },
    /// Stationary law. CSV columns: x,density,cdf, or stream,value with
    /// --sample.
    Stationary {
        /// Evaluation points, comma separated.
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Draw this many exact stationary samples instead.
        #[arg(long)]
        sample: Option<u64>,
    },
    /// Peak and trough chain. CSV columns: step,peak,trough.
    Jumpchain {
        #[arg(long, value_enum, default_value_t = StartKind::Peak)]
        start: StartKind,
        #[arg(long)]
        value: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Time-reversal test of the dual process; JSON report.
    DualTest {
        #[arg(long, default_value_t = 400)]
        paths: u64,
        /// Window length (default twice the 0.999 quantile of the
        /// stationary law plus 200).
        #[arg(long)]
        window: Option<f64>,
        #[arg(long, default_value_t = 8)]
        stride: usize,
    },
    /// Stable branching transforms and samplers.
    Csbp {
        #[command(subcommand)]
        command: CsbpCommand,
    },
    /// Run acceptance criteria; JSON reports, exit code 3 on any failure.
    Accept {
        /// Criterion name or number, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum CsbpCommand {
    /// Laplace transform of the delta family. CSV columns:
    /// beta,delta,x,t,theta,value.
    Laplace {
        #[arg(long)]
        beta: f64,
        /// Family index; defaults to the conditioned process (beta+1)/beta.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
    },
    /// Exact draws of Z_t from zero. CSV columns: stream,value.
    SampleZ {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        n: u64,
    },
    /// Relative error of the lifetime tail recomputed from branching; JSON.
    Lemma51 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.5, 0.7, 0.9])]
        beta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        t: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartKind {
    Peak,
    Trough,
}

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Acceptance(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Acceptance(_) => 3,
        }
    }
}

impl From<mrca_core::Error> for Failure {
    fn from(e: mrca_core::Error) -> Self {
        match e {
            mrca_core::Error::InvalidMeasure(_) | mrca_core::Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("output: {e}"))
    }
}

fn resolve(global: &Global) -> Result<Resolved, Failure> {
    let file = match &global.config {
        Some(p) => FileConfig::load(p).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    let measure = match &global.measure {
        Some(json) => {
            Some(serde_json::from_str(json).map_err(|e| Failure::Usage(format!("bad --measure: {e}")))?)
        }
        None => file.measure.clone(),
    };
    let defaults = Settings::default();
    numerics::set_settings(Settings {
        abs_tol: global.abs_tol.or(file.abs_tol).unwrap_or(defaults.abs_tol),
        max_depth: global.max_depth.or(file.max_depth).unwrap_or(defaults.max_depth),
        max_intervals: global.max_intervals.or(file.max_intervals).unwrap_or(defaults.max_intervals),
    });
    let tolerance_scale = global.tolerance_scale.or(file.tolerance_scale).unwrap_or(1.0);
    if !(tolerance_scale > 0.0) {
        return Err(Failure::Usage(format!("tolerance scale must be positive, got {tolerance_scale}")));
    }
    Ok(Resolved {
        measure,
        seed: global.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        parallel: global.parallel.or(file.parallel),
        tolerance_scale,
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let settings = resolve(&cli.global)?;
    if let Some(n) = settings.parallel {
        if n == 0 {
            return Err(Failure::Usage("--parallel must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let mut sink: Box<dyn Write> = match &cli.global.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout().lock())),
    };
    let result = commands::dispatch(&cli.command, &settings, &mut sink);
    sink.flush()?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) => format!("usage error: {m}"),
                Failure::Numerical(m) => format!("numerical failure: {m}"),
                Failure::Acceptance(m) => format!("acceptance failure: {m}"),
            };
            eprintln!("{msg}");
            ExitCode::from(f.code())
        }
    }
}
