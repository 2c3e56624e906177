//! Scenario configuration, loadable from TOML. Every section and field has a
//! default, so a file only needs the values it changes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::fusion::WeightSet;
use crate::geometry::{CameraIntrinsics, PerchingTarget, VisibilityThresholds};
use crate::kalman::KfParams;
use crate::planner::PlannerConfig;
use crate::sim::dynamics::{ControllerModel, DroneState};

/// A world-frame pose, cm and deg.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl WorldPose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw }
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.yaw.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Gaussian corner noise, px.
    pub pixel_sigma: f64,
    /// Per-frame, per-marker detection dropout probability.
    pub dropout_p: f64,
    /// Per-frame probability that a transmission loss starts.
    pub burst_loss_p: f64,
    /// Frames a transmission loss lasts.
    pub burst_loss_ticks: u32,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::nominal()
    }
}

impl NoiseModel {
    pub fn nominal() -> Self {
        Self {
            pixel_sigma: 0.3,
            dropout_p: 0.1,
            burst_loss_p: 0.0,
            burst_loss_ticks: 30,
        }
    }

    pub fn ideal() -> Self {
        Self {
            pixel_sigma: 0.0,
            dropout_p: 0.0,
            burst_loss_p: 0.0,
            burst_loss_ticks: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.pixel_sigma >= 0.0 && self.pixel_sigma.is_finite()) {
            return Err(format!("noise.pixel_sigma must be >= 0, got {}", self.pixel_sigma));
        }
        for (name, p) in [("dropout_p", self.dropout_p), ("burst_loss_p", self.burst_loss_p)] {
            if !(0.0..1.0).contains(&p) {
                return Err(format!("noise.{name} must be in [0, 1), got {p}"));
            }
        }
        Ok(())
    }
}

/// Randomized start box used by Monte Carlo sweeps, centred on the
/// configured start position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StartBox {
    pub half_x: f64,
    pub half_y: f64,
    pub half_z: f64,
    /// Draw the start heading uniformly from the full circle.
    pub random_yaw: bool,
}

impl Default for StartBox {
    fn default() -> Self {
        Self {
            half_x: 20.0,
            half_y: 20.0,
            half_z: 15.0,
            random_yaw: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Simulation and camera rate, Hz. Must agree with `kf.dt`.
    pub tick_rate: f64,
    pub max_ticks: u64,
    /// Test hook: the magnet never engages.
    pub force_attach_failure: bool,
    pub target_pose: WorldPose,
    pub start: WorldPose,
    pub start_box: StartBox,
    pub target: PerchingTarget,
    pub camera: CameraIntrinsics,
    pub thresholds: VisibilityThresholds,
    pub kf: KfParams,
    pub weights: WeightSet,
    pub planner: PlannerConfig,
    pub noise: NoiseModel,
    pub controller: ControllerModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            tick_rate: 30.0,
            max_ticks: 4500,
            force_attach_failure: false,
            target_pose: WorldPose::default(),
            start: WorldPose::new(0.0, 0.0, -100.0, 30.0),
            start_box: StartBox::default(),
            target: PerchingTarget::default(),
            camera: CameraIntrinsics::default(),
            thresholds: VisibilityThresholds::default(),
            kf: KfParams::default(),
            weights: WeightSet::default(),
            planner: PlannerConfig::default(),
            noise: NoiseModel::nominal(),
            controller: ControllerModel::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.tick_rate
    }

    pub fn start_state(&self) -> DroneState {
        DroneState::at(self.start.x, self.start.y, self.start.z, self.start.yaw)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return invalid(format!("tick_rate must be positive, got {}", self.tick_rate));
        }
        if self.max_ticks == 0 {
            return invalid("max_ticks must be positive".into());
        }
        self.target.validate()?;
        self.camera.validate()?;
        self.thresholds.validate()?;
        self.kf.validate().map_err(ConfigError::Invalid)?;
        if (self.kf.dt - self.dt()).abs() > 1e-9 {
            return invalid(format!("kf.dt ({}) must equal 1/tick_rate ({})", self.kf.dt, self.dt()));
        }
        self.weights.validate().map_err(ConfigError::Invalid)?;
        self.planner.validate().map_err(ConfigError::Invalid)?;
        self.noise.validate().map_err(ConfigError::Invalid)?;
        self.controller.validate().map_err(ConfigError::Invalid)?;
        if !self.target_pose.is_finite() || !self.start.is_finite() {
            return invalid("poses must be finite".into());
        }
        if self.start.z >= self.target_pose.z {
            return invalid(format!(
                "start z ({}) must be below the target surface ({})",
                self.start.z, self.target_pose.z
            ));
        }
        let b = &self.start_box;
        if !(b.half_x >= 0.0 && b.half_y >= 0.0 && b.half_z >= 0.0) {
            return invalid("start_box half extents must be >= 0".into());
        }
        if self.start.z + b.half_z >= self.target_pose.z {
            return invalid("start_box reaches the target surface".into());
        }
        Ok(())
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ScenarioConfig::from_toml_str("seed = 7\n[noise]\ndropout_p = 0.5\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.noise.dropout_p, 0.5);
        assert_eq!(cfg.noise.pixel_sigma, 0.3);
        assert_eq!(cfg.planner, PlannerConfig::default());
    }

    #[test]
    fn inconsistent_values_are_rejected() {
        for text in [
            "tick_rate = 0.0",
            "tick_rate = 60.0",
            "[thresholds]\nz1 = 115.0\nz2 = 130.0\nz3 = 12.0",
            "[noise]\ndropout_p = 1.0",
            "[controller]\ntau_xy = -1.0",
            "[start]\nz = 10.0",
            "[camera]\nfx = 0.0",
        ] {
            assert!(ScenarioConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn malformed_toml_is_a_parse_error() {
        assert!(matches!(
            ScenarioConfig::from_toml_str("seed = [").unwrap_err(),
            ConfigError::Parse(_)
        ));
    }
}
