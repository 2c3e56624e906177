//! 4-DOF perspective-n-point for a horizontal square marker.
//!
//! The marker plane is parallel to the image plane, so only `(x, y, z, yaw)`
//! are estimated. A closed-form similarity fit supplies a starting point when
//! no prior is available; Gauss-Newton on pixel reprojection error refines it.

use nalgebra::{Matrix4, Vector4};

use crate::angle::wrap_deg;
use crate::error::GeometryError;
use crate::geometry::{target_corners, CameraIntrinsics, CornerSet, MarkerSpec, RelPose};

/// Iteration limits for [`solve_pnp_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Converged once the parameter step norm (cm, rad) drops below this.
    pub step_tol: f64,
    /// Unconverged or final solutions with RMS reprojection error above this
    /// are rejected.
    pub max_rms_px: f64,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            step_tol: 1e-9,
            max_rms_px: 2.0,
        }
    }
}

// Internal parameterization: (x cm, y cm, z cm, yaw rad).
type Params = Vector4<f64>;

fn to_params(p: &RelPose) -> Params {
    Vector4::new(p.x, p.y, p.z, p.yaw.to_radians())
}

fn from_params(p: &Params) -> RelPose {
    RelPose::new(p[0], p[1], p[2], wrap_deg(p[3].to_degrees()))
}

/// Residuals (projected - observed) and their Jacobian rows, per corner.
fn residuals(
    intr: &CameraIntrinsics,
    obj: &[[f64; 2]; 4],
    corners: &CornerSet,
    p: &Params,
    mut jac: Option<&mut [[f64; 4]; 8]>,
) -> [f64; 8] {
    let (x, y, z) = (p[0], p[1], p[2]);
    let (s, c) = p[3].sin_cos();
    let mut r = [0.0; 8];
    for (i, [a, b]) in obj.iter().copied().enumerate() {
        let xc = x + c * a - s * b;
        let yc = y + s * a + c * b;
        r[2 * i] = intr.cx + intr.fx * xc / z - corners.0[i][0];
        r[2 * i + 1] = intr.cy + intr.fy * yc / z - corners.0[i][1];
        if let Some(j) = jac.as_deref_mut() {
            j[2 * i] = [intr.fx / z, 0.0, -intr.fx * xc / (z * z), -intr.fx * (yc - y) / z];
            j[2 * i + 1] = [0.0, intr.fy / z, -intr.fy * yc / (z * z), intr.fy * (xc - x) / z];
        }
    }
    r
}

/// Sum of squared corner reprojection errors, px².
pub fn reprojection_cost(intr: &CameraIntrinsics, spec: &MarkerSpec, corners: &CornerSet, pose: &RelPose) -> f64 {
    let obj = target_corners(spec);
    residuals(intr, &obj, corners, &to_params(pose), None)
        .iter()
        .map(|r| r * r)
        .sum()
}

/// Closed-form pose from corners.
///
/// In normalized image coordinates a fronto-parallel square maps through a
/// similarity `u = r + p*a - q*b`, `v = t + q*a + p*b` with `p = cos(yaw)/z`,
/// `q = sin(yaw)/z`, `r = x/z`, `t = y/z`, which is linear in `(p, q, r, t)`.
/// Range comes from the apparent scale, lateral offset from the centroid.
pub fn initial_guess_from_corners(intr: &CameraIntrinsics, spec: &MarkerSpec, corners: &CornerSet) -> Option<RelPose> {
    let obj = target_corners(spec);
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    for (i, [a, b]) in obj.iter().copied().enumerate() {
        let un = (corners.0[i][0] - intr.cx) / intr.fx;
        let vn = (corners.0[i][1] - intr.cy) / intr.fy;
        for (row, rhs) in [(Vector4::new(a, -b, 1.0, 0.0), un), (Vector4::new(b, a, 0.0, 1.0), vn)] {
            ata += row * row.transpose();
            atb += row * rhs;
        }
    }
    let sol = ata.lu().solve(&atb)?;
    let k = sol[0].hypot(sol[1]);
    if !(k > 0.0) || !k.is_finite() {
        return None;
    }
    let z = 1.0 / k;
    Some(RelPose::new(sol[2] * z, sol[3] * z, z, sol[1].atan2(sol[0]).to_degrees()))
}

struct GnResult {
    params: Params,
    iterations: usize,
    cost: f64,
}

fn gauss_newton(intr: &CameraIntrinsics, obj: &[[f64; 2]; 4], corners: &CornerSet, start: Params, opts: &PnpOptions) -> GnResult {
    let cost_of = |p: &Params| residuals(intr, obj, corners, p, None).iter().map(|r| r * r).sum::<f64>();
    let mut p = start;
    let mut cost = cost_of(&p);
    let mut jac = [[0.0; 4]; 8];
    for it in 0..opts.max_iterations {
        let r = residuals(intr, obj, corners, &p, Some(&mut jac));
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (row, ri) in jac.iter().zip(r.iter()) {
            let j = Vector4::from(*row);
            jtj += j * j.transpose();
            jtr += j * *ri;
        }
        let Some(delta) = jtj.cholesky().map(|ch| -ch.solve(&jtr)) else {
            return GnResult { params: p, iterations: it, cost };
        };
        // Backtrack if the full step overshoots or crosses the camera plane.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = p + delta * scale;
            if cand[2] > 0.0 {
                let c = cost_of(&cand);
                if c <= cost || scale == 1.0 && delta.norm() < opts.step_tol {
                    accepted = Some((cand, c));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((cand, c)) = accepted else {
            // No descent direction left: already at the minimum numerically.
            return GnResult { params: p, iterations: it + 1, cost };
        };
        let step = (delta * scale).norm();
        p = cand;
        cost = c;
        if step < opts.step_tol {
            return GnResult { params: p, iterations: it + 1, cost };
        }
    }
    GnResult { params: p, iterations: opts.max_iterations, cost }
}

/// Recovers the 4-DOF pose from four labelled corners with default options.
pub fn solve_pnp(
    intr: &CameraIntrinsics,
    spec: &MarkerSpec,
    corners: &CornerSet,
    initial_guess: &RelPose,
) -> Result<RelPose, GeometryError> {
    solve_pnp_with(intr, spec, corners, initial_guess, &PnpOptions::default())
}

/// Gauss-Newton from `initial_guess`; if that run fails it is retried once
/// from the closed-form guess.
pub fn solve_pnp_with(
    intr: &CameraIntrinsics,
    spec: &MarkerSpec,
    corners: &CornerSet,
    initial_guess: &RelPose,
    opts: &PnpOptions,
) -> Result<RelPose, GeometryError> {
    let obj = target_corners(spec);
    let accept = |res: &GnResult| {
        let rms = (res.cost / 8.0).sqrt();
        let ok = res.params.iter().all(|v| v.is_finite()) && res.params[2] > 0.0 && rms <= opts.max_rms_px;
        (ok, rms)
    };

    let mut last = None;
    if initial_guess.z > 0.0 && initial_guess.is_finite() {
        let res = gauss_newton(intr, &obj, corners, to_params(initial_guess), opts);
        let (ok, rms) = accept(&res);
        if ok {
            return Ok(from_params(&res.params));
        }
        last = Some((res.iterations, rms));
    }
    if let Some(guess) = initial_guess_from_corners(intr, spec, corners) {
        let res = gauss_newton(intr, &obj, corners, to_params(&guess), opts);
        let (ok, rms) = accept(&res);
        if ok {
            return Ok(from_params(&res.params));
        }
        last = Some((res.iterations, rms));
    }
    let (iterations, rms_px) = last.unwrap_or((0, f64::INFINITY));
    Err(GeometryError::NonConvergence { iterations, rms_px })
}

/// Closed-form guess refined by Gauss-Newton; used on first detection.
pub fn solve_pnp_cold(intr: &CameraIntrinsics, spec: &MarkerSpec, corners: &CornerSet) -> Result<RelPose, GeometryError> {
    // An invalid prior routes straight to the closed-form start.
    solve_pnp(intr, spec, corners, &RelPose::new(0.0, 0.0, 0.0, 0.0))
}
