//! The closed loop: sense, track, fuse, plan, fly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::ConfigError;
use crate::planner::{is_terminal, planner_step, LandReason, Phase, PlannerInput, PlannerState, SetpointMode};
use crate::sim::config::ScenarioConfig;
use crate::sim::dynamics::step_dynamics;
use crate::sim::estimator::PoseEstimator;
use crate::sim::sensing::{sense, SensorState};
use crate::sim::trace::TraceRecord;

/// Vertical gap to the surface within which the magnet engages, cm.
pub const ATTACH_GAP_CM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RunResult {
    Perched,
    SafetyLanded,
    Timeout,
}

impl RunResult {
    pub fn label(self) -> &'static str {
        match self {
            RunResult::Perched => "Perched",
            RunResult::SafetyLanded => "SafetyLanded",
            RunResult::Timeout => "Timeout",
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(self) -> i32 {
        match self {
            RunResult::Perched => 0,
            RunResult::SafetyLanded => 2,
            RunResult::Timeout => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOutcome {
    pub result: RunResult,
    /// Horizontal distance from the magnet centre to the target centre at
    /// attachment; present only when perched.
    pub final_lateral_error_cm: Option<f64>,
    pub ticks_elapsed: u64,
    pub perch_attempts_used: u32,
    pub land_reason: Option<LandReason>,
    /// The estimator reported a non-finite pose and the planner bailed out.
    pub failed: bool,
}

/// Runs one scenario to a terminal phase or `max_ticks`.
///
/// Each tick: sense, step the estimator, step the planner, record the
/// trace row, then advance the vehicle. The magnet engages during a throttle
/// burst once the vehicle is within [`ATTACH_GAP_CM`] of the surface and
/// within the magnet radius laterally.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(RunOutcome, Vec<TraceRecord>), ConfigError> {
    cfg.validate()?;
    let dt = cfg.dt();
    let surface_z = cfg.target_pose.z;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sensor = SensorState::default();
    let mut estimator = PoseEstimator::new();
    let mut planner = PlannerState::new();
    let mut drone = cfg.start_state();
    let mut attached = false;
    let mut attach_error = None;
    let mut trace = Vec::new();

    for tick in 0..cfg.max_ticks {
        let time = tick as f64 * dt;
        let det = sense(cfg, &drone, &mut sensor, &mut rng, estimator.priors(), false);
        let est = estimator.step(&det, &cfg.kf, &cfg.weights);
        let input = PlannerInput {
            fused: est.fused,
            attached,
            tick_time: time,
            vehicle: drone.pose(),
        };
        let (next, sp) = planner_step(&planner, &input, &cfg.planner);
        planner = next;
        trace.push(TraceRecord {
            tick,
            truth: det.truth,
            detected: [det.poses[0].is_some(), det.poses[1].is_some()],
            raw: det.poses,
            filtered: est.filtered,
            stage: est.stage,
            fused: est.fused,
            phase: planner.phase,
            setpoint: sp,
            attached,
            time,
            vehicle: [drone.position[0], drone.position[1], drone.position[2], drone.yaw],
        });
        if is_terminal(&planner) {
            break;
        }

        drone = step_dynamics(&drone, &sp, &cfg.controller, dt, attached);
        if drone.position[2] > surface_z {
            drone.position[2] = surface_z;
            drone.velocity[2] = drone.velocity[2].min(0.0);
        }
        if matches!(sp.mode, SetpointMode::Land) && drone.position[2] < cfg.planner.floor_z {
            drone.position[2] = cfg.planner.floor_z;
            drone.velocity[2] = 0.0;
        }
        if sp.mode == SetpointMode::ThrottleBurst && !attached && !cfg.force_attach_failure {
            let lateral = (drone.position[0] - cfg.target_pose.x).hypot(drone.position[1] - cfg.target_pose.y);
            if surface_z - drone.position[2] <= ATTACH_GAP_CM && lateral <= cfg.target.magnet_radius_cm {
                attached = true;
                attach_error = Some(lateral);
                drone.velocity = [0.0; 3];
            }
        }
    }

    let ticks_elapsed = trace.len() as u64;
    let result = match planner.phase {
        Phase::Perched => RunResult::Perched,
        Phase::Landed | Phase::Failed => RunResult::SafetyLanded,
        _ => RunResult::Timeout,
    };
    let outcome = RunOutcome {
        result,
        final_lateral_error_cm: if result == RunResult::Perched { attach_error } else { None },
        ticks_elapsed,
        perch_attempts_used: planner.perch_attempts,
        land_reason: planner.land_reason,
        failed: planner.phase == Phase::Failed,
    };
    Ok((outcome, trace))
}

/// Convenience wrapper that drops the trace.
pub fn run_outcome(cfg: &ScenarioConfig) -> Result<RunOutcome, ConfigError> {
    run_scenario(cfg).map(|(o, _)| o)
}
