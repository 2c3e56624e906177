//! Seeded batches of scenarios with randomized starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::ConfigError;
use crate::sim::config::{ScenarioConfig, WorldPose};
use crate::sim::scenario::{run_outcome, RunOutcome, RunResult};

/// Start-pose draws use a separate stream so they never disturb the
/// in-scenario sensor sequence for the same seed.
const START_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub start: WorldPose,
    pub outcome: RunOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub n_runs: usize,
    pub base_seed: u64,
    pub perched: usize,
    pub safety_landed: usize,
    pub timeouts: usize,
    pub success_rate: f64,
    /// Over perched runs; `None` when nothing perched.
    pub mean_final_error_cm: Option<f64>,
    pub p95_final_error_cm: Option<f64>,
    pub max_final_error_cm: Option<f64>,
    pub mean_ticks: f64,
    pub runs: Vec<RunRecord>,
}

/// Start pose for run `seed`, drawn uniformly from the configured box.
pub fn randomized_start(cfg: &ScenarioConfig, seed: u64) -> WorldPose {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(START_STREAM);
    let b = &cfg.start_box;
    let mut sym = |h: f64| if h > 0.0 { rng.random_range(-h..=h) } else { 0.0 };
    let x = cfg.start.x + sym(b.half_x);
    let y = cfg.start.y + sym(b.half_y);
    let z = cfg.start.z + sym(b.half_z);
    let yaw = if b.random_yaw {
        180.0 - rng.random_range(0.0..360.0)
    } else {
        cfg.start.yaw
    };
    WorldPose::new(x, y, z, yaw)
}

/// Nearest-rank percentile of an unsorted sample, `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

fn summarize(base_seed: u64, runs: Vec<RunRecord>) -> MonteCarloSummary {
    let n = runs.len();
    let count = |r: RunResult| runs.iter().filter(|x| x.outcome.result == r).count();
    let perched = count(RunResult::Perched);
    let errors: Vec<f64> = runs.iter().filter_map(|r| r.outcome.final_lateral_error_cm).collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    MonteCarloSummary {
        n_runs: n,
        base_seed,
        perched,
        safety_landed: count(RunResult::SafetyLanded),
        timeouts: count(RunResult::Timeout),
        success_rate: perched as f64 / n as f64,
        mean_final_error_cm: mean(&errors),
        p95_final_error_cm: percentile(&errors, 0.95),
        max_final_error_cm: errors.iter().copied().reduce(f64::max),
        mean_ticks: runs.iter().map(|r| r.outcome.ticks_elapsed as f64).sum::<f64>() / n as f64,
        runs,
    }
}

/// Runs seeds `base_seed..base_seed + n_runs` in parallel. `threads` pins the
/// pool size; `None` uses the global pool. Results are ordered by seed, so
/// the summary does not depend on the degree of parallelism.
pub fn monte_carlo(
    cfg: &ScenarioConfig,
    n_runs: usize,
    base_seed: u64,
    threads: Option<usize>,
) -> Result<MonteCarloSummary, ConfigError> {
    if n_runs == 0 {
        return Err(ConfigError::Invalid("n_runs must be at least 1".into()));
    }
    cfg.validate()?;
    let one = |i: usize| -> Result<RunRecord, ConfigError> {
        let seed = base_seed.wrapping_add(i as u64);
        let start = randomized_start(cfg, seed);
        let run_cfg = ScenarioConfig {
            seed,
            start,
            ..cfg.clone()
        };
        Ok(RunRecord {
            seed,
            start,
            outcome: run_outcome(&run_cfg)?,
        })
    };
    let runs: Result<Vec<_>, _> = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?
            .install(|| (0..n_runs).into_par_iter().map(one).collect()),
        None => (0..n_runs).into_par_iter().map(one).collect(),
    };
    Ok(summarize(base_seed, runs?))
}
