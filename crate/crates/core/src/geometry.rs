//! Marker and target geometry, the simulated upward-facing pinhole camera,
//! and range-gated marker visibility.
//!
//! Frames: the camera frame has +z along the optical axis (pointing up at the
//! perching surface), +x forward and +y left. A [`RelPose`] places the target
//! centre in that frame and rotates the target about the optical axis by
//! `yaw`. Lengths are centimetres, angles degrees.

use serde::{Deserialize, Serialize};

use crate::angle::wrap_deg;
use crate::error::GeometryError;

/// ArUco dictionary a marker is drawn from. Stored as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DictTag {
    Dict4x4_100,
    DictArucoOriginal,
}

/// A square fiducial marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerSpec {
    /// Opaque marker id. Not checked against the dictionary size.
    pub id: u32,
    pub dict_tag: DictTag,
    pub side_mm: f64,
    /// Offset of the marker centre from the target centre, mm.
    #[serde(default)]
    pub center_offset: [f64; 2],
}

impl MarkerSpec {
    pub fn new(id: u32, dict_tag: DictTag, side_mm: f64) -> Result<Self, GeometryError> {
        let spec = Self {
            id,
            dict_tag,
            side_mm,
            center_offset: [0.0, 0.0],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.side_mm > 0.0 && self.side_mm.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::InvalidMarkerSide(self.side_mm))
        }
    }

    /// Half the side length in centimetres.
    pub fn half_side_cm(&self) -> f64 {
        self.side_mm / 20.0
    }

    /// The large outer marker: 150 mm, DICT_4X4_100.
    pub fn large() -> Self {
        Self {
            id: 997,
            dict_tag: DictTag::Dict4x4_100,
            side_mm: 150.0,
            center_offset: [0.0, 0.0],
        }
    }

    /// The small inner marker: 25 mm, DICT_ARUCO_ORIGINAL.
    pub fn small() -> Self {
        Self {
            id: 5,
            dict_tag: DictTag::DictArucoOriginal,
            side_mm: 25.0,
            center_offset: [0.0, 0.0],
        }
    }
}

/// Identifies one of the two markers on the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarkerId {
    /// Large marker (M1).
    Large,
    /// Small marker (M2).
    Small,
}

impl MarkerId {
    pub const ALL: [MarkerId; 2] = [MarkerId::Large, MarkerId::Small];

    pub fn index(self) -> usize {
        match self {
            MarkerId::Large => 0,
            MarkerId::Small => 1,
        }
    }
}

/// A small marker nested inside a large one, with a round magnet at the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerchingTarget {
    pub large: MarkerSpec,
    pub small: MarkerSpec,
    pub magnet_radius_cm: f64,
}

impl Default for PerchingTarget {
    fn default() -> Self {
        Self {
            large: MarkerSpec::large(),
            small: MarkerSpec::small(),
            magnet_radius_cm: 2.5,
        }
    }
}

impl PerchingTarget {
    pub fn marker(&self, id: MarkerId) -> &MarkerSpec {
        match id {
            MarkerId::Large => &self.large,
            MarkerId::Small => &self.small,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        self.large.validate()?;
        self.small.validate()?;
        if self.small.side_mm >= self.large.side_mm {
            return Err(GeometryError::InvalidMarkerSide(self.small.side_mm));
        }
        Ok(())
    }
}

/// Pinhole intrinsics in pixels, no distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fx: 460.0,
            fy: 460.0,
            cx: 320.0,
            cy: 240.0,
            width: 640,
            height: 480,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: &str| Err(GeometryError::InvalidIntrinsics(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return bad("focal lengths must be positive");
        }
        if !(self.cx >= 0.0 && self.cx < f64::from(self.width)) {
            return bad("cx outside image");
        }
        if !(self.cy >= 0.0 && self.cy < f64::from(self.height)) {
            return bad("cy outside image");
        }
        Ok(())
    }

    pub fn contains(&self, px: [f64; 2]) -> bool {
        px[0] >= 0.0 && px[0] <= f64::from(self.width) && px[1] >= 0.0 && px[1] <= f64::from(self.height)
    }
}

/// 4-DOF pose of the target centre relative to the camera.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelPose {
    pub x: f64,
    pub y: f64,
    /// Range along the optical axis.
    pub z: f64,
    pub yaw: f64,
}

impl RelPose {
    /// Builds a pose with the yaw normalized.
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            yaw: wrap_deg(yaw),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.yaw]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn lateral_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Component-wise difference `self - other`, yaw on the shortest arc.
    pub fn error_to(&self, other: &RelPose) -> [f64; 4] {
        [
            self.x - other.x,
            self.y - other.y,
            self.z - other.z,
            wrap_deg(self.yaw - other.yaw),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.yaw.is_finite()
    }
}

/// Pixel corners ordered top-left, top-right, bottom-right, bottom-left in
/// the marker frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerSet(pub [[f64; 2]; 4]);

impl CornerSet {
    pub fn centroid(&self) -> [f64; 2] {
        let mut c = [0.0, 0.0];
        for p in &self.0 {
            c[0] += p[0] / 4.0;
            c[1] += p[1] / 4.0;
        }
        c
    }

    /// Width and height of the axis-aligned bounding box.
    pub fn bbox_extent(&self) -> [f64; 2] {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.0 {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [hi[0] - lo[0], hi[1] - lo[1]]
    }
}

/// Empirical detection ranges of the two markers, cm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisibilityThresholds {
    /// Max range of the large marker.
    pub z1: f64,
    /// Max range of the small marker.
    pub z2: f64,
    /// Min range of the large marker.
    pub z3: f64,
}

impl Default for VisibilityThresholds {
    fn default() -> Self {
        Self {
            z1: 115.0,
            z2: 25.0,
            z3: 12.0,
        }
    }
}

impl VisibilityThresholds {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.z3 > 0.0 && self.z3 < self.z2 && self.z2 < self.z1 {
            Ok(())
        } else {
            Err(GeometryError::InvalidThresholds {
                z1: self.z1,
                z2: self.z2,
                z3: self.z3,
            })
        }
    }
}

/// Which markers a frame contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VisibleMarkers {
    pub large: bool,
    pub small: bool,
}

impl VisibleMarkers {
    pub fn get(&self, id: MarkerId) -> bool {
        match id {
            MarkerId::Large => self.large,
            MarkerId::Small => self.small,
        }
    }
}

/// Marker-frame corners in cm, canonical order, on the z=0 plane.
pub fn marker_corners_3d(spec: &MarkerSpec) -> [[f64; 3]; 4] {
    let h = spec.half_side_cm();
    [[-h, h, 0.0], [h, h, 0.0], [h, -h, 0.0], [-h, -h, 0.0]]
}

/// Corners in the target frame (marker corners shifted by the marker offset).
pub(crate) fn target_corners(spec: &MarkerSpec) -> [[f64; 2]; 4] {
    let (ox, oy) = (spec.center_offset[0] / 10.0, spec.center_offset[1] / 10.0);
    marker_corners_3d(spec).map(|c| [c[0] + ox, c[1] + oy])
}

/// Projects marker corners without any field-of-view test.
///
/// Returns `None` only when the target plane is at or behind the camera.
pub fn project_corners(intr: &CameraIntrinsics, pose: &RelPose, spec: &MarkerSpec) -> Option<CornerSet> {
    if !(pose.z > 0.0) {
        return None;
    }
    let (s, c) = pose.yaw.to_radians().sin_cos();
    let pts = target_corners(spec).map(|[a, b]| {
        let xc = pose.x + c * a - s * b;
        let yc = pose.y + s * a + c * b;
        [intr.cx + intr.fx * xc / pose.z, intr.cy + intr.fy * yc / pose.z]
    });
    Some(CornerSet(pts))
}

/// Projects a marker, returning `None` (not visible) when any corner leaves
/// the image or the target is behind the camera.
pub fn project_marker(intr: &CameraIntrinsics, pose: &RelPose, spec: &MarkerSpec) -> Option<CornerSet> {
    project_corners(intr, pose, spec).filter(|cs| cs.0.iter().all(|p| intr.contains(*p)))
}

/// Range-gated, field-of-view-checked visibility with per-marker dropout.
///
/// `dropout_draws` are uniform samples in [0, 1), one per marker in
/// [`MarkerId::ALL`] order; a marker is dropped when its draw falls below
/// `dropout_p`. Range boundaries are inclusive.
pub fn detectable(
    pose: &RelPose,
    intr: &CameraIntrinsics,
    target: &PerchingTarget,
    th: &VisibilityThresholds,
    dropout_draws: [f64; 2],
    dropout_p: f64,
) -> VisibleMarkers {
    let z = pose.z;
    let large = z >= th.z3
        && z <= th.z1
        && project_marker(intr, pose, &target.large).is_some()
        && dropout_draws[0] >= dropout_p;
    let small = z <= th.z2 && project_marker(intr, pose, &target.small).is_some() && dropout_draws[1] >= dropout_p;
    VisibleMarkers { large, small }
}
