//! Self-checks and data generators shared by the CLI, examples and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::ConfigError;
use crate::fusion::{LmsSample, StageId, WeightSet};
use crate::geometry::{project_corners, project_marker, CameraIntrinsics, MarkerId, PerchingTarget, RelPose};
use crate::pnp::solve_pnp_cold;
use crate::sim::config::ScenarioConfig;
use crate::sim::replay::stationary_trace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PnpCheckReport {
    pub n: usize,
    pub failures: usize,
    pub max_translation_error_cm: f64,
    pub max_yaw_error_deg: f64,
}

/// Random pose with `z` in `[z_min, z_max]`, lateral offset uniform over the
/// disc of radius `0.5 * z`, yaw uniform over the circle.
pub fn random_pose<R: Rng>(rng: &mut R, z_min: f64, z_max: f64) -> RelPose {
    let z = rng.random_range(z_min..=z_max);
    let r = 0.5 * z * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    let yaw = 180.0 - rng.random_range(0.0..360.0);
    RelPose::new(r * a.cos(), r * a.sin(), z, yaw)
}

/// Projects `n` random poses without noise, alternating markers, and solves
/// each back from the closed-form start.
pub fn pnp_round_trip(intr: &CameraIntrinsics, target: &PerchingTarget, n: usize, seed: u64) -> PnpCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = PnpCheckReport {
        n,
        failures: 0,
        max_translation_error_cm: 0.0,
        max_yaw_error_deg: 0.0,
    };
    for i in 0..n {
        let truth = random_pose(&mut rng, 5.0, 120.0);
        let spec = target.marker(MarkerId::ALL[i % 2]);
        let cs = project_corners(intr, &truth, spec).expect("z > 0");
        match solve_pnp_cold(intr, spec, &cs) {
            Ok(est) => {
                let e = est.error_to(&truth);
                let t = e[..3].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                rep.max_translation_error_cm = rep.max_translation_error_cm.max(t);
                rep.max_yaw_error_deg = rep.max_yaw_error_deg.max(e[3].abs());
            }
            Err(_) => rep.failures += 1,
        }
    }
    rep
}

/// Synthetic stage-2 samples whose truth is the weighted merge of the two
/// estimates plus Gaussian noise of `sigma` (cm, or deg for yaw).
pub fn synthetic_lms_samples(w: &WeightSet, n: usize, sigma: f64, seed: u64) -> Vec<LmsSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and >= 0");
    let wa = w.to_array();
    (0..n)
        .map(|_| {
            let m2 = random_pose(&mut rng, 12.0, 25.0);
            // the two estimates differ by up to a couple of cm / degrees
            let d = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-4.0..4.0),
            ];
            let b = m2.to_array();
            let m1: [f64; 4] = std::array::from_fn(|k| b[k] + d[k]);
            let truth: [f64; 4] = std::array::from_fn(|k| b[k] + wa[k] * d[k] + noise.sample(&mut rng));
            LmsSample {
                est_m1: RelPose::from_array(m1),
                est_m2: m2,
                truth: RelPose::from_array(truth),
            }
        })
        .collect()
}

/// Holds the vehicle for `frames` ticks at each of `points` random poses
/// with both markers in view, pairing the two filtered marker estimates
/// with the truth on every stage-2 frame.
pub fn collect_stage2_samples(
    cfg: &ScenarioConfig,
    points: usize,
    frames: u64,
    seed: u64,
) -> Result<Vec<LmsSample>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z_lo = cfg.thresholds.z3;
    let z_hi = cfg.thresholds.z2;
    let mut out = Vec::new();
    for p in 0..points {
        // rejection-sample until both markers fit in the image
        let mut tries = 0;
        let rel = loop {
            tries += 1;
            if tries > 10_000 {
                return Err(ConfigError::Invalid("no pose in range keeps both markers in view".into()));
            }
            let z = rng.random_range(z_lo..=z_hi);
            let lim = 0.1 * z;
            let rel = RelPose::new(
                rng.random_range(-lim..=lim),
                rng.random_range(-lim..=lim),
                z,
                180.0 - rng.random_range(0.0..360.0),
            );
            let fits = |id: MarkerId| project_marker(&cfg.camera, &rel, cfg.target.marker(id)).is_some();
            if MarkerId::ALL.into_iter().all(fits) {
                break rel;
            }
        };
        let run = ScenarioConfig {
            seed: seed.wrapping_add(p as u64 + 1),
            ..cfg.clone()
        };
        for r in stationary_trace(&run, rel, frames)? {
            if let (Some(StageId::S2), [Some(a), Some(b)]) = (r.stage, r.filtered) {
                out.push(LmsSample {
                    est_m1: a,
                    est_m2: b,
                    truth: r.truth,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_poses_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = random_pose(&mut rng, 5.0, 120.0);
            assert!((5.0..=120.0).contains(&p.z));
            assert!(p.lateral_norm() <= 0.5 * p.z + 1e-12);
            assert!(p.yaw > -180.0 && p.yaw <= 180.0);
        }
    }

    #[test]
    fn small_round_trip_is_exact() {
        let rep = pnp_round_trip(&CameraIntrinsics::default(), &PerchingTarget::default(), 50, 1);
        assert_eq!(rep.failures, 0);
        assert!(rep.max_translation_error_cm < 1e-6 && rep.max_yaw_error_deg < 1e-6, "{rep:?}");
    }

    #[test]
    fn noiseless_synthetic_samples_are_exact_merges() {
        let w = WeightSet::default();
        for s in synthetic_lms_samples(&w, 20, 0.0, 4) {
            for k in 0..4 {
                let (d, t) = s.component(k);
                assert!((t - w.to_array()[k] * d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stage2_collection_yields_pairs() {
        let s = collect_stage2_samples(&ScenarioConfig::default(), 2, 20, 5).unwrap();
        assert!(s.len() > 20, "{}", s.len());
    }
}
