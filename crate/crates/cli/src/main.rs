//! `resonance` command-line front end.
//!
//! Exit codes: 0 success, 1 internal error (or a failed verification check),
//! 2 usage or domain error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use resonance_core::config::{Command, ConstructionMethod, OutputFormat, RunConfig, Suite};
use resonance_core::pipeline::{execute, manifest_path};
use resonance_core::resonance::{ScanStrategy, DEFAULT_Z_BUDGET};
use resonance_core::{arith, Error, SignFilter, CACHE_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "resonance", version, about = "Resonance-method experiments on quadratic character sums")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Range parameter: discriminants with X < |d| <= 2X.
    #[arg(long = "X", global = true, default_value_t = resonance_core::config::DEFAULT_BIG_X)]
    big_x: u64,
    /// Length divisor: sums run over n <= |d|/x.
    #[arg(long = "x", global = true, default_value_t = resonance_core::config::DEFAULT_X)]
    x: f64,
    /// Resonator size (default: floor(X^(1/2-delta)/x)).
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Friability bound (default: smallest bound admitting N).
    #[arg(long, global = true)]
    y: Option<u64>,
    #[arg(long, global = true, default_value_t = resonance_core::config::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, global = true, default_value_t = resonance_core::config::DEFAULT_EPSILON)]
    epsilon: f64,
    /// Constant in the Polya error bound.
    #[arg(long, global = true, default_value_t = resonance_core::charsum::DEFAULT_KAPPA)]
    kappa: f64,
    /// Cap on the per-discriminant truncation length z.
    #[arg(long = "z-budget", global = true, default_value_t = DEFAULT_Z_BUDGET)]
    z_budget: f64,
    #[arg(long, global = true, default_value_t = resonance_core::config::DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file; a manifest is written next to it as <stem>.manifest.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StrategyArg {
    Full,
    Guided,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SignArg {
    Both,
    Positive,
    Negative,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MethodArg {
    Structured,
    Greedy,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SuiteArg {
    Lemma22,
    Polya,
    Parity,
    Innersum,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact character sum with its Polya approximation and error bound.
    Charsum {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        /// Summation length (default: floor(|d|/x)).
        #[arg(long)]
        len: Option<u64>,
    },
    /// Scan X < |d| <= 2X for large normalized character sums.
    Scan {
        #[arg(long, value_enum, default_value_t = StrategyArg::Full)]
        strategy: StrategyArg,
        /// Number of top-weighted discriminants for the guided strategy.
        #[arg(long, default_value_t = 500)]
        k: usize,
        /// Resonator file (required for the guided strategy).
        #[arg(long)]
        resonator: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SignArg::Both)]
        sign: SignArg,
    },
    /// Build a resonator set and report its GCD sum.
    Resonator {
        #[arg(long, value_enum, default_value_t = MethodArg::Structured)]
        method: MethodArg,
    },
    /// Resonance moments M1, M2 and their quotient for a resonator set.
    Moments {
        /// Resonator file (default: the structured set for N, y).
        #[arg(long)]
        resonator: Option<PathBuf>,
    },
    /// Run a property suite and print a pass/fail table.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
}

impl Cli {
    fn into_config(self) -> RunConfig {
        let g = self.global;
        let command = match self.command {
            Cmd::Charsum { d, len } => Command::Charsum { d, len },
            Cmd::Scan { strategy, k, resonator, sign } => Command::Scan {
                strategy: match strategy {
                    StrategyArg::Full => ScanStrategy::Full,
                    StrategyArg::Guided => ScanStrategy::ResonanceGuided { k },
                },
                resonator,
                sign: match sign {
                    SignArg::Both => SignFilter::Both,
                    SignArg::Positive => SignFilter::Positive,
                    SignArg::Negative => SignFilter::Negative,
                },
            },
            Cmd::Resonator { method } => Command::Resonator {
                method: match method {
                    MethodArg::Structured => ConstructionMethod::Structured,
                    MethodArg::Greedy => ConstructionMethod::Greedy,
                },
            },
            Cmd::Moments { resonator } => Command::Moments { resonator },
            Cmd::Verify { suite } => Command::Verify {
                suite: match suite {
                    SuiteArg::Lemma22 => Suite::Lemma22,
                    SuiteArg::Polya => Suite::Polya,
                    SuiteArg::Parity => Suite::Parity,
                    SuiteArg::Innersum => Suite::Innersum,
                },
            },
        };
        RunConfig {
            command,
            big_x: g.big_x,
            x: g.x,
            n: g.n,
            y: g.y,
            delta: g.delta,
            epsilon: g.epsilon,
            kappa: g.kappa,
            z_budget: g.z_budget,
            seed: g.seed,
            output_path: g.out,
            format: match g.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            },
            threads: g.threads,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io(_)) => 1,
        Some(_) => 2,
        None => 1,
    }
}

fn run(cfg: RunConfig) -> anyhow::Result<u8> {
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    if let Some(dir) = std::env::var_os(CACHE_DIR_ENV) {
        arith::set_cache_dir(PathBuf::from(dir));
    }
    let out = execute(&cfg)?;
    match &cfg.output_path {
        Some(path) => {
            fs::write(path, &out.primary).with_context(|| format!("writing {}", path.display()))?;
            let mut manifest = out.manifest;
            manifest.outputs.push(path.display().to_string());
            if !matches!(cfg.command, Command::Moments { .. }) {
                let mpath = manifest_path(path);
                manifest.outputs.push(mpath.display().to_string());
                fs::write(&mpath, manifest.to_json() + "\n")
                    .with_context(|| format!("writing {}", mpath.display()))?;
                info!("manifest written to {}", mpath.display());
            }
            print!("{}", out.summary);
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(out.primary.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(if out.failed_checks > 0 { 1 } else { 0 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = cli.into_config();
    match std::panic::catch_unwind(|| run(cfg)) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
        Err(_) => ExitCode::from(1),
    }
}
