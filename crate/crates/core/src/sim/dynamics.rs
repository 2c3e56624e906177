//! Saturated first-order setpoint tracking standing in for the onboard
//! position/attitude cascade.

use serde::{Deserialize, Serialize};

use crate::angle::{shortest_arc, wrap_deg};
use crate::planner::{Setpoint, SetpointMode, VehiclePose};

/// Gravity, cm/s².
const GRAVITY: f64 = 981.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DroneState {
    /// World position, cm.
    pub position: [f64; 3],
    /// Heading, deg.
    pub yaw: f64,
    /// World velocity, cm/s.
    pub velocity: [f64; 3],
    /// deg/s.
    pub yaw_rate: f64,
}

impl DroneState {
    pub fn at(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            position: [x, y, z],
            yaw: wrap_deg(yaw),
            velocity: [0.0; 3],
            yaw_rate: 0.0,
        }
    }

    pub fn pose(&self) -> VehiclePose {
        VehiclePose {
            x: self.position[0],
            y: self.position[1],
            z: self.position[2],
            yaw: self.yaw,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite()) && self.yaw.is_finite() && self.yaw_rate.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerModel {
    /// Lateral time constant, s.
    pub tau_xy: f64,
    /// Vertical time constant, s.
    pub tau_z: f64,
    /// Heading time constant, s.
    pub tau_yaw: f64,
    /// Max horizontal speed, cm/s.
    pub v_max_xy: f64,
    /// Max vertical speed, cm/s. Also the throttle-burst climb rate.
    pub v_max_z: f64,
    /// deg/s.
    pub yaw_rate_max: f64,
}

impl Default for ControllerModel {
    fn default() -> Self {
        Self {
            tau_xy: 0.25,
            tau_z: 0.25,
            tau_yaw: 0.3,
            v_max_xy: 50.0,
            v_max_z: 30.0,
            yaw_rate_max: 90.0,
        }
    }
}

impl ControllerModel {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("tau_xy", self.tau_xy),
            ("tau_z", self.tau_z),
            ("tau_yaw", self.tau_yaw),
            ("v_max_xy", self.v_max_xy),
            ("v_max_z", self.v_max_z),
            ("yaw_rate_max", self.yaw_rate_max),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("controller.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Rate that closes `err` exactly as a first-order lag would over `dt`.
fn lag_rate(err: f64, tau: f64, dt: f64) -> f64 {
    err * (1.0 - (-dt / tau).exp()) / dt
}

/// Advances the vehicle one tick toward the setpoint.
///
/// Position mode tracks the setpoint with a first-order lag per axis group,
/// saturating horizontal speed, vertical speed and yaw rate. A throttle burst
/// climbs at `v_max_z` with no lateral control. Motors-off freezes an
/// attached vehicle and drops an unattached one. Land descends at half of
/// `v_max_z`.
pub fn step_dynamics(d: &DroneState, sp: &Setpoint, cm: &ControllerModel, dt: f64, attached: bool) -> DroneState {
    let mut n = *d;
    match sp.mode {
        SetpointMode::Position => {
            let mut vx = lag_rate(sp.x_d - d.position[0], cm.tau_xy, dt);
            let mut vy = lag_rate(sp.y_d - d.position[1], cm.tau_xy, dt);
            let speed = vx.hypot(vy);
            if speed > cm.v_max_xy {
                vx *= cm.v_max_xy / speed;
                vy *= cm.v_max_xy / speed;
            }
            let vz = lag_rate(sp.z_d - d.position[2], cm.tau_z, dt).clamp(-cm.v_max_z, cm.v_max_z);
            let wz = lag_rate(shortest_arc(d.yaw, sp.psi_d), cm.tau_yaw, dt).clamp(-cm.yaw_rate_max, cm.yaw_rate_max);
            n.velocity = [vx, vy, vz];
            n.yaw_rate = wz;
        }
        SetpointMode::ThrottleBurst => {
            n.velocity = [0.0, 0.0, cm.v_max_z];
            n.yaw_rate = 0.0;
        }
        SetpointMode::MotorsOff if attached => {
            n.velocity = [0.0; 3];
            n.yaw_rate = 0.0;
        }
        SetpointMode::MotorsOff => {
            n.velocity[2] -= GRAVITY * dt;
            n.yaw_rate = 0.0;
        }
        SetpointMode::Land => {
            n.velocity = [0.0, 0.0, -0.5 * cm.v_max_z];
            n.yaw_rate = 0.0;
        }
    }
    for k in 0..3 {
        n.position[k] += n.velocity[k] * dt;
    }
    n.yaw = wrap_deg(d.yaw + n.yaw_rate * dt);
    n
}
