//! Stage classification, dual-marker pose merging and LMS weight fitting.

use serde::{Deserialize, Serialize};

use crate::angle::{shortest_arc, wrap_deg};
use crate::error::FusionError;
use crate::geometry::RelPose;

/// Which markers contribute to the fused pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageId {
    /// Only the large marker.
    S1,
    /// Both markers.
    S2,
    /// Only the small marker.
    S3,
}

impl StageId {
    pub fn label(self) -> &'static str {
        match self {
            StageId::S1 => "S1",
            StageId::S2 => "S2",
            StageId::S3 => "S3",
        }
    }
}

/// Per-component weight given to the large marker in stage S2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightSet {
    pub w_x: f64,
    pub w_y: f64,
    pub w_z: f64,
    pub w_psi: f64,
}

impl Default for WeightSet {
    /// Weights fitted on the reference hardware.
    fn default() -> Self {
        Self {
            w_x: 0.275,
            w_y: 0.306,
            w_z: 0.728,
            w_psi: 0.469,
        }
    }
}

impl WeightSet {
    pub fn uniform(w: f64) -> Self {
        Self {
            w_x: w,
            w_y: w,
            w_z: w,
            w_psi: w,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w_x, self.w_y, self.w_z, self.w_psi]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            w_x: a[0],
            w_y: a[1],
            w_z: a[2],
            w_psi: a[3],
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, w) in ["w_x", "w_y", "w_z", "w_psi"].iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&w) {
                return Err(format!("weight {name} must be in [0, 1], got {w}"));
            }
        }
        Ok(())
    }
}

/// Relative pose of the drone to the target centre, as consumed by the planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedPose {
    pub e_x: f64,
    pub e_y: f64,
    pub e_z: f64,
    pub e_psi: f64,
    pub stage: StageId,
    /// False when built from stale filter states.
    pub fresh: bool,
}

impl FusedPose {
    pub fn as_rel_pose(&self) -> RelPose {
        RelPose::new(self.e_x, self.e_y, self.e_z, self.e_psi)
    }

    pub fn is_finite(&self) -> bool {
        self.as_rel_pose().is_finite()
    }
}

/// Stage from which markers are present. `None` means no target.
pub fn classify_stage(m1_present: bool, m2_present: bool) -> Option<StageId> {
    match (m1_present, m2_present) {
        (true, false) => Some(StageId::S1),
        (true, true) => Some(StageId::S2),
        (false, true) => Some(StageId::S3),
        (false, false) => None,
    }
}

/// Merges per-marker poses for the given stage.
///
/// S1 and S3 pass the single marker through. S2 takes a per-component convex
/// combination weighted toward the large marker by `w`; yaw is interpolated
/// on the shortest arc from the small marker's heading.
pub fn merge(stage: StageId, p_m1: Option<&RelPose>, p_m2: Option<&RelPose>, w: &WeightSet) -> Result<FusedPose, FusionError> {
    let need = |p: Option<&RelPose>, missing: &'static str| p.copied().ok_or(FusionError::MissingPose { stage, missing });
    let pose = match stage {
        StageId::S1 => need(p_m1, "large")?,
        StageId::S3 => need(p_m2, "small")?,
        StageId::S2 => {
            let a = need(p_m1, "large")?;
            let b = need(p_m2, "small")?;
            let mix = |w: f64, c1: f64, c2: f64| w * c1 + (1.0 - w) * c2;
            RelPose {
                x: mix(w.w_x, a.x, b.x),
                y: mix(w.w_y, a.y, b.y),
                z: mix(w.w_z, a.z, b.z),
                yaw: wrap_deg(b.yaw + w.w_psi * shortest_arc(b.yaw, a.yaw)),
            }
        }
    };
    Ok(FusedPose {
        e_x: pose.x,
        e_y: pose.y,
        e_z: pose.z,
        e_psi: wrap_deg(pose.yaw),
        stage,
        fresh: true,
    })
}

/// One paired observation for weight fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmsSample {
    pub est_m1: RelPose,
    pub est_m2: RelPose,
    pub truth: RelPose,
}

impl LmsSample {
    /// Regressor `m1 - m2` and target `truth - m2` for component `k`
    /// (0..3 = x, y, z, yaw). Yaw differences are wrapped.
    pub fn component(&self, k: usize) -> (f64, f64) {
        let (a, b, t) = (self.est_m1.to_array(), self.est_m2.to_array(), self.truth.to_array());
        if k == 3 {
            (shortest_arc(b[3], a[3]), shortest_arc(b[3], t[3]))
        } else {
            (a[k] - b[k], t[k] - b[k])
        }
    }
}

/// Result of [`fit_weights_lms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmsFit {
    pub weights: WeightSet,
    /// Mean squared merge error per component before fitting (weights 0.5).
    pub initial_cost: [f64; 4],
    /// Mean squared merge error per component with the fitted weights.
    pub final_cost: [f64; 4],
    /// Components whose regressor was identically zero; their weight stays 0.5.
    pub degenerate: [bool; 4],
}

const LMS_INITIAL_WEIGHT: f64 = 0.5;

fn mean_sq_error(samples: &[LmsSample], k: usize, w: f64) -> f64 {
    samples
        .iter()
        .map(|s| {
            let (d, t) = s.component(k);
            let e = t - w * d;
            e * e
        })
        .sum::<f64>()
        / samples.len() as f64
}

/// Default LMS step, as a fraction of the largest regressor power.
pub const DEFAULT_LMS_STEP: f64 = 0.5;
/// Default number of passes over the sample set.
pub const DEFAULT_LMS_EPOCHS: usize = 50;

/// Fits the four merge weights by per-component scalar LMS.
///
/// Each component runs `w <- w + mu * e * (c1 - c2)` with
/// `e = truth - (w*c1 + (1-w)*c2)`, cycling over the samples for `epochs`
/// passes, clamping `w` to `[0, 1]` after every update. The step is
/// `mu = step / max (c1 - c2)^2`, so any `step` in `(0, 2)` is stable.
///
/// The reported weight is the `(c1 - c2)^2`-weighted mean of the iterates
/// over the last pass. Once the cyclic iteration is periodic, the updates
/// over one pass sum to zero, which makes this mean the least-squares
/// minimizer of the mean squared merge error.
pub fn fit_weights_lms(samples: &[LmsSample], step: f64, epochs: usize) -> Result<LmsFit, FusionError> {
    if samples.len() < 2 {
        return Err(FusionError::TooFewSamples(samples.len()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(FusionError::InvalidStep(step));
    }
    let epochs = epochs.max(1);
    let mut weights = [LMS_INITIAL_WEIGHT; 4];
    let mut degenerate = [false; 4];
    let mut initial_cost = [0.0; 4];
    let mut final_cost = [0.0; 4];
    for k in 0..4 {
        initial_cost[k] = mean_sq_error(samples, k, LMS_INITIAL_WEIGHT);
        let max_power = samples.iter().map(|s| s.component(k).0.powi(2)).fold(0.0, f64::max);
        if max_power == 0.0 {
            degenerate[k] = true;
            final_cost[k] = initial_cost[k];
            continue;
        }
        let mu = step / max_power;
        let mut w = LMS_INITIAL_WEIGHT;
        let (mut acc, mut norm) = (0.0, 0.0);
        for epoch in 0..epochs {
            let last = epoch + 1 == epochs;
            for s in samples {
                let (d, t) = s.component(k);
                if last {
                    acc += w * d * d;
                    norm += d * d;
                }
                let e = t - w * d;
                w = (w + mu * e * d).clamp(0.0, 1.0);
            }
        }
        weights[k] = (acc / norm).clamp(0.0, 1.0);
        final_cost[k] = mean_sq_error(samples, k, weights[k]);
    }
    Ok(LmsFit {
        weights: WeightSet::from_array(weights),
        initial_cost,
        final_cost,
        degenerate,
    })
}

/// Parses a whitespace-separated sample table: 12 numbers per line
/// (large-marker pose, small-marker pose, true pose; each x y z yaw).
/// Blank lines and `#` comments are skipped.
pub fn parse_sample_table(text: &str) -> Result<Vec<LmsSample>, FusionError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FusionError::SampleParse {
                line: i + 1,
                reason: e.to_string(),
            })?;
        if nums.len() != 12 {
            return Err(FusionError::SampleParse {
                line: i + 1,
                reason: format!("expected 12 numbers, found {}", nums.len()),
            });
        }
        let pose = |o: usize| RelPose::new(nums[o], nums[o + 1], nums[o + 2], nums[o + 3]);
        out.push(LmsSample {
            est_m1: pose(0),
            est_m2: pose(4),
            truth: pose(8),
        });
    }
    Ok(out)
}

/// Inverse of [`parse_sample_table`].
pub fn format_sample_table(samples: &[LmsSample]) -> String {
    let mut s = String::from("# m1_x m1_y m1_z m1_yaw m2_x m2_y m2_z m2_yaw true_x true_y true_z true_yaw\n");
    for smp in samples {
        let row: Vec<String> = [smp.est_m1, smp.est_m2, smp.truth]
            .iter()
            .flat_map(|p| p.to_array())
            .map(|v| format!("{v}"))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}
