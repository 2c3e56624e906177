//! Per-marker tracking followed by stage fusion.

use crate::fusion::{classify_stage, merge, FusedPose, StageId, WeightSet};
use crate::geometry::{MarkerId, RelPose};
use crate::kalman::{KfParams, MarkerTracker};
use crate::sim::sensing::DetectionSet;

/// Output of one estimator frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimateFrame {
    /// Filtered pose per marker, including stale estimates.
    pub filtered: [Option<RelPose>; 2],
    /// Which filtered poses are currently valid.
    pub valid: [bool; 2],
    pub stage: Option<StageId>,
    pub fused: Option<FusedPose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseEstimator {
    trackers: [MarkerTracker; 2],
}

impl PoseEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tracker(&self, id: MarkerId) -> &MarkerTracker {
        &self.trackers[id.index()]
    }

    /// Current estimates, used as PnP starting points for the next frame.
    pub fn priors(&self) -> [Option<RelPose>; 2] {
        self.trackers.map(|t| t.any_pose())
    }

    /// Steps both trackers and fuses.
    ///
    /// The stage is chosen from the valid trackers. When none is valid but
    /// some have been initialized, their stale estimates are fused and the
    /// result is marked not fresh.
    pub fn step(&mut self, det: &DetectionSet, kf: &KfParams, w: &WeightSet) -> EstimateFrame {
        for id in MarkerId::ALL {
            self.trackers[id.index()].step(det.poses[id.index()].as_ref(), kf);
        }
        let valid_poses = self.trackers.map(|t| t.valid_pose());
        let any_poses = self.priors();
        let valid = valid_poses.map(|p| p.is_some());

        let (poses, fresh) = if valid.iter().any(|v| *v) {
            (valid_poses, true)
        } else {
            (any_poses, false)
        };
        let stage = classify_stage(poses[0].is_some(), poses[1].is_some());
        let fused = stage.map(|s| {
            let mut f = merge(s, poses[0].as_ref(), poses[1].as_ref(), w).expect("stage chosen from the available poses");
            f.fresh = fresh;
            f
        });
        EstimateFrame {
            filtered: any_poses,
            valid,
            stage: if fresh { stage } else { None },
            fused,
        }
    }
}
