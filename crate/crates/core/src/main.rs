use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use perch::error::ConfigError;
use perch::fusion::{fit_weights_lms, parse_sample_table, DEFAULT_LMS_EPOCHS, DEFAULT_LMS_STEP};
use perch::sim::checks::{collect_stage2_samples, pnp_round_trip};
use perch::sim::{gap_trace, monte_carlo, run_scenario, write_trace_csv, GapDemo, ScenarioConfig, TraceRecord};

const EXIT_INVALID_CONFIG: u8 = 64;

#[derive(Parser)]
#[command(name = "perch", version, about = "Vision-guided perching simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario config (TOML). Defaults apply to anything left out.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; exit code reflects the outcome.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write the per-tick trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Seeded batch with randomized starts.
    Montecarlo {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Fit merge weights from a sample table, or from simulated stage-2 data.
    FitWeights {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sample table: 12 numbers per line (m1 pose, m2 pose, true pose).
        #[arg(long, conflicts_with = "collect")]
        samples: Option<PathBuf>,
        /// Collect samples at this many random stationary points instead.
        #[arg(long)]
        collect: Option<usize>,
        #[arg(long, default_value_t = 100)]
        frames: u64,
        #[arg(long, default_value_t = DEFAULT_LMS_STEP)]
        step: f64,
        #[arg(long, default_value_t = DEFAULT_LMS_EPOCHS)]
        epochs: usize,
    },
    /// Noiseless projection / PnP round trip over random poses.
    PnpCheck {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value_t = 1000)]
        n: usize,
    },
    /// Constant-rate motion with a forced detection gap; CSV trace out.
    KfDemo {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 60)]
        gap_start: u64,
        #[arg(long, default_value_t = 30)]
        gap_len: u64,
        #[arg(long, default_value_t = 150)]
        frames: u64,
    },
}

#[derive(Debug)]
enum CliError {
    Config(ConfigError),
    Other(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

fn print_toml<T: Serialize>(v: &T) -> Result<(), CliError> {
    print!("{}", toml::to_string(v).map_err(other)?);
    Ok(())
}

fn write_csv(path: Option<&PathBuf>, trace: &[TraceRecord]) -> Result<(), CliError> {
    match path {
        Some(p) => write_trace_csv(BufWriter::new(File::create(p).map_err(other)?), trace).map_err(other),
        None => write_trace_csv(io::stdout().lock(), trace).map_err(other),
    }
}

#[derive(Serialize)]
struct McReport {
    n_runs: usize,
    base_seed: u64,
    perched: usize,
    safety_landed: usize,
    timeouts: usize,
    success_rate: f64,
    mean_final_error_cm: Option<f64>,
    p95_final_error_cm: Option<f64>,
    max_final_error_cm: Option<f64>,
    mean_ticks: f64,
    elapsed_s: f64,
}

fn dispatch(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Run { cfg, trace } => {
            let cfg = cfg.load()?;
            let (outcome, records) = run_scenario(&cfg)?;
            if let Some(p) = trace.as_ref() {
                write_csv(Some(p), &records)?;
            }
            print_toml(&outcome)?;
            Ok(outcome.result.exit_code() as u8)
        }
        Cmd::Montecarlo { cfg, runs, threads } => {
            let cfg = cfg.load()?;
            let t0 = Instant::now();
            let s = monte_carlo(&cfg, runs, cfg.seed, threads)?;
            print_toml(&McReport {
                n_runs: s.n_runs,
                base_seed: s.base_seed,
                perched: s.perched,
                safety_landed: s.safety_landed,
                timeouts: s.timeouts,
                success_rate: s.success_rate,
                mean_final_error_cm: s.mean_final_error_cm,
                p95_final_error_cm: s.p95_final_error_cm,
                max_final_error_cm: s.max_final_error_cm,
                mean_ticks: s.mean_ticks,
                elapsed_s: t0.elapsed().as_secs_f64(),
            })?;
            Ok(0)
        }
        Cmd::FitWeights {
            cfg,
            samples,
            collect,
            frames,
            step,
            epochs,
        } => {
            let cfg = cfg.load()?;
            let data = match (samples, collect) {
                (Some(p), _) => parse_sample_table(&std::fs::read_to_string(p).map_err(other)?).map_err(other)?,
                (None, Some(points)) => collect_stage2_samples(&cfg, points, frames, cfg.seed)?,
                (None, None) => return Err(other("pass --samples FILE or --collect N")),
            };
            let fit = fit_weights_lms(&data, step, epochs).map_err(other)?;
            println!("# {} samples", data.len());
            for (k, name) in ["x", "y", "z", "yaw"].iter().enumerate() {
                let flag = if fit.degenerate[k] { " (degenerate, kept 0.5)" } else { "" };
                println!(
                    "# {name}: mse {:.6} -> {:.6}{flag}",
                    fit.initial_cost[k], fit.final_cost[k]
                );
            }
            #[derive(Serialize)]
            struct Out {
                weights: perch::fusion::WeightSet,
            }
            print_toml(&Out { weights: fit.weights })?;
            Ok(0)
        }
        Cmd::PnpCheck { cfg, n } => {
            let cfg = cfg.load()?;
            let t0 = Instant::now();
            let rep = pnp_round_trip(&cfg.camera, &cfg.target, n, cfg.seed);
            print_toml(&rep)?;
            println!("elapsed_s = {}", t0.elapsed().as_secs_f64());
            let pass = rep.failures == 0 && rep.max_translation_error_cm <= 1e-6 && rep.max_yaw_error_deg <= 1e-6;
            println!("pass = {pass}");
            Ok(if pass { 0 } else { 1 })
        }
        Cmd::KfDemo {
            cfg,
            out,
            gap_start,
            gap_len,
            frames,
        } => {
            let cfg = cfg.load()?;
            let demo = GapDemo {
                gap_start,
                gap_len,
                frames,
                ..GapDemo::default()
            };
            write_csv(out.as_ref(), &gap_trace(&cfg, &demo)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(code) => {
            let _ = io::stdout().flush();
            ExitCode::from(code)
        }
        Err(CliError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_CONFIG)
        }
        Err(CliError::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
