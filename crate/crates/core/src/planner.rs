//! Seven-phase perching state machine.
//!
//! Phases: approach the perching area, search for the target, estimate its
//! pose, align laterally and in heading, ascend, execute the perch (throttle
//! burst with stabilization off) and complete (motors off). Failed perches
//! retreat and retry; exhausted searches, exhausted perch attempts and the
//! overall timeout end in a safety landing.
//!
//! Setpoints are world-frame positions in cm and a world heading in degrees.
//! The fused relative pose is rotated into the world frame with the
//! vehicle's own heading.

use serde::{Deserialize, Serialize};

use crate::angle::wrap_deg;
use crate::fusion::FusedPose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Approach,
    Search,
    EstimatePose,
    Align,
    Ascend,
    Execute,
    Complete,
    SafetyLand,
    Landed,
    Perched,
    Failed,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Approach => "Approach",
            Phase::Search => "Search",
            Phase::EstimatePose => "EstimatePose",
            Phase::Align => "Align",
            Phase::Ascend => "Ascend",
            Phase::Execute => "Execute",
            Phase::Complete => "Complete",
            Phase::SafetyLand => "SafetyLand",
            Phase::Landed => "Landed",
            Phase::Perched => "Perched",
            Phase::Failed => "Failed",
        }
    }
}

/// Why the planner ended in a landing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LandReason {
    SearchExhausted,
    PerchAttemptsExhausted,
    PerchTimeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    /// Lateral alignment tolerance, cm.
    pub align_tol_xy: f64,
    /// Heading alignment tolerance, deg.
    pub align_tol_yaw: f64,
    /// Altitude gained per tick while ascending, cm.
    pub ascend_step: f64,
    /// Relative range that triggers perch execution, cm.
    pub close_z: f64,
    /// Altitude gained per failed search attempt, cm.
    pub search_climb_step: f64,
    pub max_search_attempts: u32,
    pub max_perch_attempts: u32,
    /// Overall time budget, s.
    pub perch_timeout: f64,
    /// Descent before retrying a failed perch, cm.
    pub retreat_dz: f64,
    /// Time allowed for the magnet to latch during a throttle burst, s.
    pub execute_window: f64,
    /// Perching-area waypoint in the world frame; `None` hovers in place.
    pub approach_waypoint: Option<[f64; 3]>,
    /// Distance at which the waypoint counts as reached, cm.
    pub waypoint_tol: f64,
    /// How close to the retreat altitude before re-estimating, cm.
    pub retreat_tol: f64,
    /// Highest commanded altitude in position mode (world z, cm).
    pub ceiling_z: f64,
    /// Lowest commanded altitude in position mode (world z, cm).
    pub floor_z: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            align_tol_xy: 2.0,
            align_tol_yaw: 5.0,
            ascend_step: 2.0,
            close_z: 6.0,
            search_climb_step: 10.0,
            max_search_attempts: 20,
            max_perch_attempts: 3,
            perch_timeout: 120.0,
            retreat_dz: 10.0,
            execute_window: 0.5,
            approach_waypoint: None,
            waypoint_tol: 2.0,
            retreat_tol: 1.0,
            ceiling_z: -2.0,
            floor_z: -300.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("align_tol_xy", self.align_tol_xy),
            ("align_tol_yaw", self.align_tol_yaw),
            ("ascend_step", self.ascend_step),
            ("close_z", self.close_z),
            ("search_climb_step", self.search_climb_step),
            ("perch_timeout", self.perch_timeout),
            ("retreat_dz", self.retreat_dz),
            ("execute_window", self.execute_window),
            ("waypoint_tol", self.waypoint_tol),
            ("retreat_tol", self.retreat_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("planner.{name} must be positive, got {v}"));
            }
        }
        if self.max_search_attempts == 0 || self.max_perch_attempts == 0 {
            return Err("planner attempt limits must be positive".into());
        }
        if !(self.floor_z < self.ceiling_z) {
            return Err(format!(
                "planner.floor_z ({}) must be below ceiling_z ({})",
                self.floor_z, self.ceiling_z
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetpointMode {
    Position,
    ThrottleBurst,
    MotorsOff,
    Land,
}

impl SetpointMode {
    pub fn label(self) -> &'static str {
        match self {
            SetpointMode::Position => "Position",
            SetpointMode::ThrottleBurst => "ThrottleBurst",
            SetpointMode::MotorsOff => "MotorsOff",
            SetpointMode::Land => "Land",
        }
    }
}

/// Command for the vehicle. Position fields only matter in `Position` mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub x_d: f64,
    pub y_d: f64,
    pub z_d: f64,
    pub psi_d: f64,
    pub mode: SetpointMode,
}

/// The vehicle's own world pose, from its onboard state estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehiclePose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerInput {
    /// Latest fused target pose; `None` when nothing is tracked.
    pub fused: Option<FusedPose>,
    /// Magnet contact.
    pub attached: bool,
    /// Simulation time, s. Strictly increasing.
    pub tick_time: f64,
    pub vehicle: VehiclePose,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerState {
    pub phase: Phase,
    /// Cumulative ticks spent searching without a detection.
    pub search_attempts: u32,
    /// Throttle bursts started so far.
    pub perch_attempts: u32,
    pub land_reason: Option<LandReason>,
    start_time: Option<f64>,
    execute_started: Option<f64>,
    search_origin_z: f64,
    search_ticks: u32,
    retreat_z: Option<f64>,
    hold: Option<[f64; 4]>,
    /// Fused pose that started the current throttle burst.
    pub burst_trigger: Option<FusedPose>,
}

impl Default for PlannerState {
    fn default() -> Self {
        Self::new()
    }
}

impl PlannerState {
    pub fn new() -> Self {
        Self {
            phase: Phase::Approach,
            search_attempts: 0,
            perch_attempts: 0,
            land_reason: None,
            start_time: None,
            execute_started: None,
            search_origin_z: 0.0,
            search_ticks: 0,
            retreat_z: None,
            hold: None,
            burst_trigger: None,
        }
    }

    fn enter(&mut self, phase: Phase) {
        if phase == Phase::Search && self.phase != Phase::Search {
            self.search_ticks = 0;
        }
        self.phase = phase;
    }
}

/// True for the absorbing phases.
pub fn is_terminal(state: &PlannerState) -> bool {
    matches!(state.phase, Phase::Perched | Phase::Landed | Phase::Failed)
}

fn command(mode: SetpointMode, v: &VehiclePose) -> Setpoint {
    Setpoint {
        x_d: v.x,
        y_d: v.y,
        z_d: v.z,
        psi_d: v.yaw,
        mode,
    }
}

fn position(cfg: &PlannerConfig, x: f64, y: f64, z: f64, psi: f64) -> Setpoint {
    Setpoint {
        x_d: x,
        y_d: y,
        z_d: z.clamp(cfg.floor_z, cfg.ceiling_z),
        psi_d: wrap_deg(psi),
        mode: SetpointMode::Position,
    }
}

/// World position of the target centre and the heading that zeroes the
/// relative yaw, from the vehicle pose and a fused relative pose.
fn target_in_world(v: &VehiclePose, f: &FusedPose) -> (f64, f64, f64) {
    let (s, c) = v.yaw.to_radians().sin_cos();
    let x = v.x + c * f.e_x - s * f.e_y;
    let y = v.y + s * f.e_x + c * f.e_y;
    (x, y, wrap_deg(v.yaw + f.e_psi))
}

fn aligned(f: &FusedPose, cfg: &PlannerConfig) -> bool {
    f.e_x.abs() <= cfg.align_tol_xy && f.e_y.abs() <= cfg.align_tol_xy && f.e_psi.abs() <= cfg.align_tol_yaw
}

/// Advances the state machine by one tick.
pub fn planner_step(state: &PlannerState, input: &PlannerInput, cfg: &PlannerConfig) -> (PlannerState, Setpoint) {
    let mut s = *state;
    let v = &input.vehicle;
    match s.phase {
        Phase::Perched => return (s, command(SetpointMode::MotorsOff, v)),
        Phase::Landed | Phase::Failed => return (s, command(SetpointMode::Land, v)),
        _ => {}
    }
    let start = *s.start_time.get_or_insert(input.tick_time);

    if input.fused.is_some_and(|f| !f.is_finite()) {
        s.enter(Phase::Failed);
        return (s, command(SetpointMode::Land, v));
    }
    let fused = input.fused.filter(|f| f.fresh);

    if s.phase != Phase::Complete && s.phase != Phase::SafetyLand && input.tick_time - start >= cfg.perch_timeout {
        s.land_reason = Some(LandReason::PerchTimeout);
        s.enter(Phase::SafetyLand);
        return (s, command(SetpointMode::Land, v));
    }

    let hold = *s.hold.get_or_insert([v.x, v.y, v.z, v.yaw]);
    let hold_sp = |s: &mut PlannerState, z: f64| {
        s.hold = Some([hold[0], hold[1], z, hold[3]]);
        position(cfg, hold[0], hold[1], z, hold[3])
    };

    match s.phase {
        Phase::Approach => {
            let wp = cfg.approach_waypoint.unwrap_or([hold[0], hold[1], hold[2]]);
            s.hold = Some([wp[0], wp[1], wp[2], hold[3]]);
            let d = ((v.x - wp[0]).powi(2) + (v.y - wp[1]).powi(2) + (v.z - wp[2]).powi(2)).sqrt();
            if d <= cfg.waypoint_tol {
                s.search_origin_z = wp[2];
                s.enter(Phase::Search);
            }
            (s, position(cfg, wp[0], wp[1], wp[2], hold[3]))
        }
        Phase::Search => {
            if fused.is_some() {
                s.enter(Phase::EstimatePose);
                let z = hold[2];
                return (s, hold_sp(&mut s, z));
            }
            if s.search_ticks == 0 {
                s.search_origin_z = hold[2];
            }
            s.search_attempts += 1;
            s.search_ticks += 1;
            if s.search_attempts >= cfg.max_search_attempts {
                s.land_reason = Some(LandReason::SearchExhausted);
                s.enter(Phase::SafetyLand);
                return (s, command(SetpointMode::Land, v));
            }
            let z = (s.search_origin_z + cfg.search_climb_step * f64::from(s.search_ticks)).min(cfg.ceiling_z);
            (s, position(cfg, hold[0], hold[1], z, hold[3]))
        }
        Phase::EstimatePose => {
            if let Some(rz) = s.retreat_z {
                let sp = hold_sp(&mut s, rz);
                if fused.is_some() && (v.z - rz).abs() <= cfg.retreat_tol {
                    s.retreat_z = None;
                    s.enter(Phase::Align);
                }
                return (s, sp);
            }
            let z = hold[2];
            let sp = hold_sp(&mut s, z);
            if fused.is_some() {
                s.enter(Phase::Align);
            } else {
                s.enter(Phase::Search);
            }
            (s, sp)
        }
        Phase::Align => {
            let Some(f) = fused else {
                s.enter(Phase::Search);
                let z = hold[2];
                return (s, hold_sp(&mut s, z));
            };
            let (tx, ty, psi) = target_in_world(v, &f);
            s.hold = Some([tx, ty, hold[2], psi]);
            if aligned(&f, cfg) {
                s.enter(Phase::Ascend);
            }
            (s, position(cfg, tx, ty, hold[2], psi))
        }
        Phase::Ascend => {
            let Some(f) = fused else {
                s.enter(Phase::Search);
                let z = v.z;
                return (s, hold_sp(&mut s, z));
            };
            let (tx, ty, psi) = target_in_world(v, &f);
            if !aligned(&f, cfg) {
                s.hold = Some([tx, ty, v.z, psi]);
                s.enter(Phase::Align);
                return (s, position(cfg, tx, ty, v.z, psi));
            }
            if f.e_z <= cfg.close_z {
                s.perch_attempts += 1;
                s.execute_started = Some(input.tick_time);
                s.burst_trigger = Some(f);
                s.enter(Phase::Execute);
                return (s, command(SetpointMode::ThrottleBurst, v));
            }
            let z = v.z + cfg.ascend_step;
            s.hold = Some([tx, ty, z, psi]);
            (s, position(cfg, tx, ty, z, psi))
        }
        Phase::Execute => {
            if input.attached {
                s.enter(Phase::Complete);
                return (s, command(SetpointMode::MotorsOff, v));
            }
            let started = s.execute_started.unwrap_or(input.tick_time);
            if input.tick_time - started < cfg.execute_window {
                return (s, command(SetpointMode::ThrottleBurst, v));
            }
            s.execute_started = None;
            s.burst_trigger = None;
            if s.perch_attempts < cfg.max_perch_attempts {
                let rz = v.z - cfg.retreat_dz;
                s.retreat_z = Some(rz);
                s.hold = Some([v.x, v.y, rz, v.yaw]);
                s.enter(Phase::EstimatePose);
                (s, position(cfg, v.x, v.y, rz, v.yaw))
            } else {
                s.land_reason = Some(LandReason::PerchAttemptsExhausted);
                s.enter(Phase::SafetyLand);
                (s, command(SetpointMode::Land, v))
            }
        }
        Phase::Complete => {
            s.enter(Phase::Perched);
            (s, command(SetpointMode::MotorsOff, v))
        }
        Phase::SafetyLand => {
            s.enter(Phase::Landed);
            (s, command(SetpointMode::Land, v))
        }
        Phase::Perched | Phase::Landed | Phase::Failed => unreachable!("handled above"),
    }
}
