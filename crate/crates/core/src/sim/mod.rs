//! Closed-loop simulation: vehicle dynamics, synthetic camera, the estimator
//! pipeline, scenario runs, traces and batch statistics.

pub mod checks;
pub mod config;
pub mod dynamics;
pub mod estimator;
pub mod montecarlo;
pub mod replay;
pub mod scenario;
pub mod sensing;
pub mod trace;

pub use config::{NoiseModel, ScenarioConfig, StartBox, WorldPose};
pub use dynamics::{step_dynamics, ControllerModel, DroneState};
pub use estimator::{EstimateFrame, PoseEstimator};
pub use montecarlo::{monte_carlo, MonteCarloSummary};
pub use replay::{gap_trace, replay_estimation, stationary_trace, EstimationReport, GapDemo};
pub use scenario::{run_outcome, run_scenario, RunOutcome, RunResult};
pub use sensing::{relative_pose, sense, DetectionSet, SensorState};
pub use trace::{write_trace_csv, TraceRecord};
