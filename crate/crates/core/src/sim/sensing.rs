//! Synthetic camera: visibility, noisy corners and per-marker PnP.
//!
//! Draw order per frame (fixed so seeds reproduce): one uniform for
//! transmission-loss onset, then for each marker in id order one dropout
//! uniform followed by eight corner-noise normals. Every draw is taken on
//! every frame whether or not it is used.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::angle::wrap_deg;
use crate::geometry::{detectable, project_corners, CornerSet, MarkerId, RelPose};
use crate::pnp::solve_pnp;
use crate::sim::config::{ScenarioConfig, WorldPose};
use crate::sim::dynamics::DroneState;

/// One frame's detections, indexed by [`MarkerId::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionSet {
    /// Ground truth for the frame.
    pub truth: RelPose,
    pub corners: [Option<CornerSet>; 2],
    /// PnP output; absent when the marker was not seen or PnP failed.
    pub poses: [Option<RelPose>; 2],
    /// A transmission loss blanked this frame.
    pub burst_lost: bool,
}

impl DetectionSet {
    pub fn detected(&self, id: MarkerId) -> bool {
        self.poses[id.index()].is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.iter().all(Option::is_none)
    }
}

/// Remaining frames of an active transmission loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SensorState {
    pub burst_remaining: u32,
}

/// Pose of the target centre in the camera frame of a vehicle.
///
/// Camera axes: +x forward, +y left, +z up along the optical axis. World
/// axes share that convention, so with the target above the vehicle the
/// range is `target.z - vehicle.z`.
pub fn relative_pose(drone: &DroneState, target: &WorldPose) -> RelPose {
    let dx = target.x - drone.position[0];
    let dy = target.y - drone.position[1];
    let (s, c) = drone.yaw.to_radians().sin_cos();
    RelPose::new(
        c * dx + s * dy,
        -s * dx + c * dy,
        target.z - drone.position[2],
        wrap_deg(target.yaw - drone.yaw),
    )
}

/// Vehicle state that sees `rel` when looking at `target`; the inverse of
/// [`relative_pose`].
pub fn drone_for_relative(rel: &RelPose, target: &WorldPose) -> DroneState {
    let yaw = wrap_deg(target.yaw - rel.yaw);
    let (s, c) = yaw.to_radians().sin_cos();
    DroneState::at(
        target.x - (c * rel.x - s * rel.y),
        target.y - (s * rel.x + c * rel.y),
        target.z - rel.z,
        yaw,
    )
}

/// Senses one frame.
///
/// `priors` seed PnP per marker, normally the trackers' current estimates.
/// `force_loss` blanks the frame as a transmission loss would, without
/// changing the draw sequence.
pub fn sense<R: Rng>(
    cfg: &ScenarioConfig,
    drone: &DroneState,
    sensor: &mut SensorState,
    rng: &mut R,
    priors: [Option<RelPose>; 2],
    force_loss: bool,
) -> DetectionSet {
    let truth = relative_pose(drone, &cfg.target_pose);
    let onset: f64 = rng.random();
    let lost = if sensor.burst_remaining > 0 {
        sensor.burst_remaining -= 1;
        true
    } else if onset < cfg.noise.burst_loss_p && cfg.noise.burst_loss_ticks > 0 {
        sensor.burst_remaining = cfg.noise.burst_loss_ticks - 1;
        true
    } else {
        false
    };

    let mut dropout = [0.0; 2];
    let mut noise = [[0.0; 8]; 2];
    for id in MarkerId::ALL {
        dropout[id.index()] = rng.random();
        for n in noise[id.index()].iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *n = z * cfg.noise.pixel_sigma;
        }
    }

    let mut out = DetectionSet {
        truth,
        burst_lost: lost || force_loss,
        ..DetectionSet::default()
    };
    if out.burst_lost {
        return out;
    }
    let vis = detectable(&truth, &cfg.camera, &cfg.target, &cfg.thresholds, dropout, cfg.noise.dropout_p);
    for id in MarkerId::ALL {
        if !vis.get(id) {
            continue;
        }
        let spec = cfg.target.marker(id);
        let Some(mut cs) = project_corners(&cfg.camera, &truth, spec) else {
            continue;
        };
        let eps = &noise[id.index()];
        for (k, p) in cs.0.iter_mut().enumerate() {
            p[0] += eps[2 * k];
            p[1] += eps[2 * k + 1];
        }
        let prior = priors[id.index()].unwrap_or_default();
        out.corners[id.index()] = Some(cs);
        out.poses[id.index()] = solve_pnp(&cfg.camera, spec, &cs, &prior).ok();
    }
    out
}
