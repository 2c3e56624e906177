//! Degree-valued angle helpers.
//!
//! All headings at module boundaries are in degrees and normalized to the
//! half-open interval (-180, 180].

/// Wraps an angle in degrees into (-180, 180].
#[inline]
pub fn wrap_deg(angle: f64) -> f64 {
    if angle > -180.0 && angle <= 180.0 {
        return angle;
    }
    let r = angle.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Signed shortest-arc difference `to - from`, in (-180, 180].
#[inline]
pub fn shortest_arc(from: f64, to: f64) -> f64 {
    wrap_deg(to - from)
}

/// Interpolates from `from` toward `to` along the shortest arc.
///
/// `t = 0` yields `from`, `t = 1` yields `to` (both wrapped).
#[inline]
pub fn lerp_deg(from: f64, to: f64, t: f64) -> f64 {
    wrap_deg(from + t * shortest_arc(from, to))
}
