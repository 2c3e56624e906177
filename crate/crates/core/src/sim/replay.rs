//! Estimation-only runs and error analysis over traces.
//!
//! These drive the sensing and estimation chain along a scripted relative
//! trajectory with the planner and dynamics out of the loop, which is how
//! estimator accuracy is characterized at fixed positions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::ConfigError;
use crate::geometry::RelPose;
use crate::planner::{Phase, Setpoint, SetpointMode};
use crate::sim::config::ScenarioConfig;
use crate::sim::estimator::PoseEstimator;
use crate::sim::sensing::{drone_for_relative, sense, SensorState};
use crate::sim::trace::TraceRecord;

/// Fused-minus-true error of one tick, `(x, y, z, yaw)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TickError {
    pub tick: u64,
    /// `None` when no fresh fused pose existed.
    pub error: Option<[f64; 4]>,
}

/// A run of ticks with an unchanged true pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarySegment {
    pub first_tick: u64,
    pub last_tick: u64,
    pub truth: RelPose,
    /// Ticks in the segment that had a fresh fused pose.
    pub samples: usize,
    /// Mean fused pose over those ticks.
    pub mean_estimate: Option<[f64; 4]>,
    /// max - min of the error per axis.
    pub peak_to_peak: Option<[f64; 4]>,
    /// Largest error magnitude per axis.
    pub max_abs_error: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    pub per_tick: Vec<TickError>,
    pub segments: Vec<StationarySegment>,
}

fn fresh_error(r: &TraceRecord) -> Option<[f64; 4]> {
    r.fused.filter(|f| f.fresh).map(|f| f.as_rel_pose().error_to(&r.truth))
}

fn segment_stats(records: &[TraceRecord], skip: usize) -> StationarySegment {
    let used = records.get(skip..).unwrap_or(&[]);
    let mut samples = 0usize;
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    let mut max_abs = [0.0f64; 4];
    let mut sum = [0.0; 4];
    let truth = records[0].truth;
    for r in used {
        let Some(e) = fresh_error(r) else { continue };
        samples += 1;
        for k in 0..4 {
            lo[k] = lo[k].min(e[k]);
            hi[k] = hi[k].max(e[k]);
            max_abs[k] = max_abs[k].max(e[k].abs());
            // accumulate the estimate as truth + error so yaw stays unwrapped
            sum[k] += e[k];
        }
    }
    let have = samples > 0;
    let t = truth.to_array();
    StationarySegment {
        first_tick: records[0].tick,
        last_tick: records[records.len() - 1].tick,
        truth,
        samples,
        mean_estimate: have.then(|| {
            let m: [f64; 4] = std::array::from_fn(|k| t[k] + sum[k] / samples as f64);
            RelPose::from_array(m).to_array()
        }),
        peak_to_peak: have.then(|| std::array::from_fn(|k| hi[k] - lo[k])),
        max_abs_error: have.then_some(max_abs),
    }
}

/// Per-tick fused errors and per-segment statistics for every stationary
/// stretch of at least two ticks. The first `skip` ticks of each segment
/// are excluded from its statistics.
pub fn replay_estimation(trace: &[TraceRecord], skip: usize) -> EstimationReport {
    let per_tick = trace
        .iter()
        .map(|r| TickError {
            tick: r.tick,
            error: fresh_error(r),
        })
        .collect();
    let same = |a: &RelPose, b: &RelPose| a.error_to(b).iter().all(|e| e.abs() <= 1e-9);
    let segments = trace
        .chunk_by(|a, b| same(&a.truth, &b.truth))
        .filter(|seg| seg.len() >= 2)
        .map(|seg| segment_stats(seg, skip))
        .collect();
    EstimationReport { per_tick, segments }
}

/// Drives the estimator along `truth_at(tick)` for `frames` ticks.
/// `lost_at(tick)` forces a transmission loss on that frame.
pub fn scripted_trace(
    cfg: &ScenarioConfig,
    frames: u64,
    truth_at: impl Fn(u64) -> RelPose,
    lost_at: impl Fn(u64) -> bool,
) -> Result<Vec<TraceRecord>, ConfigError> {
    cfg.validate()?;
    let dt = cfg.dt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sensor = SensorState::default();
    let mut est = PoseEstimator::new();
    let mut out = Vec::with_capacity(frames as usize);
    for tick in 0..frames {
        let drone = drone_for_relative(&truth_at(tick), &cfg.target_pose);
        let det = sense(cfg, &drone, &mut sensor, &mut rng, est.priors(), lost_at(tick));
        let frame = est.step(&det, &cfg.kf, &cfg.weights);
        out.push(TraceRecord {
            tick,
            truth: det.truth,
            detected: [det.poses[0].is_some(), det.poses[1].is_some()],
            raw: det.poses,
            filtered: frame.filtered,
            stage: frame.stage,
            fused: frame.fused,
            phase: Phase::EstimatePose,
            setpoint: Setpoint {
                x_d: drone.position[0],
                y_d: drone.position[1],
                z_d: drone.position[2],
                psi_d: drone.yaw,
                mode: SetpointMode::Position,
            },
            attached: false,
            time: tick as f64 * dt,
            vehicle: [drone.position[0], drone.position[1], drone.position[2], drone.yaw],
        });
    }
    Ok(out)
}

/// Vehicle held at a fixed relative pose for `frames` ticks.
pub fn stationary_trace(cfg: &ScenarioConfig, rel: RelPose, frames: u64) -> Result<Vec<TraceRecord>, ConfigError> {
    scripted_trace(cfg, frames, |_| rel, |_| false)
}

/// Constant-rate relative motion with a forced detection gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapDemo {
    pub start: RelPose,
    /// `(x, y, z, yaw)` rates, cm/s and deg/s.
    pub rate: [f64; 4],
    pub frames: u64,
    pub gap_start: u64,
    pub gap_len: u64,
}

impl Default for GapDemo {
    fn default() -> Self {
        Self {
            start: RelPose::new(2.0, -1.0, 40.0, 10.0),
            rate: [1.0, -0.5, -1.0, 0.0],
            frames: 150,
            gap_start: 60,
            gap_len: 30,
        }
    }
}

impl GapDemo {
    pub fn truth_at(&self, tick: u64, dt: f64) -> RelPose {
        let t = tick as f64 * dt;
        let s = self.start.to_array();
        RelPose::from_array(std::array::from_fn(|k| s[k] + self.rate[k] * t))
    }

    pub fn in_gap(&self, tick: u64) -> bool {
        tick >= self.gap_start && tick < self.gap_start + self.gap_len
    }
}

pub fn gap_trace(cfg: &ScenarioConfig, demo: &GapDemo) -> Result<Vec<TraceRecord>, ConfigError> {
    let dt = cfg.dt();
    scripted_trace(cfg, demo.frames, |k| demo.truth_at(k, dt), |k| demo.in_gap(k))
}
