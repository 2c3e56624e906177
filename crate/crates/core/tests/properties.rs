use proptest::prelude::*;

use perch::fusion::{merge, FusedPose, StageId, WeightSet};
use perch::geometry::{project_corners, CameraIntrinsics, MarkerSpec, RelPose};
use perch::planner::{planner_step, PlannerConfig, PlannerInput, PlannerState, SetpointMode, VehiclePose};
use perch::pnp::{solve_pnp, solve_pnp_cold};
use perch::sim::{step_dynamics, ControllerModel, DroneState};

fn pose() -> impl Strategy<Value = RelPose> {
    (5.0f64..120.0, 0.0f64..1.0, 0.0f64..std::f64::consts::TAU, -179.999f64..=180.0).prop_map(|(z, r, a, yaw)| {
        let rho = 0.5 * z * r.sqrt();
        RelPose::new(rho * a.cos(), rho * a.sin(), z, yaw)
    })
}

fn planner_input() -> impl Strategy<Value = (Option<[f64; 4]>, bool, bool, [f64; 4])> {
    (
        prop::option::of(prop::array::uniform4(-40.0f64..40.0)),
        any::<bool>(),
        any::<bool>(),
        prop::array::uniform4(-100.0f64..0.0),
    )
}

fn to_input(t: f64, (f, fresh, attached, v): (Option<[f64; 4]>, bool, bool, [f64; 4])) -> PlannerInput {
    PlannerInput {
        fused: f.map(|e| FusedPose {
            e_x: e[0],
            e_y: e[1],
            e_z: e[2].abs(),
            e_psi: e[3] * 4.0,
            stage: StageId::S2,
            fresh,
        }),
        attached,
        tick_time: t,
        vehicle: VehiclePose {
            x: v[0],
            y: v[1],
            z: v[2],
            yaw: v[3] * 1.8,
        },
    }
}

proptest! {
    #[test]
    fn pnp_round_trip_any_marker(truth in pose(), small in any::<bool>()) {
        let intr = CameraIntrinsics::default();
        let spec = if small { MarkerSpec::small() } else { MarkerSpec::large() };
        let cs = project_corners(&intr, &truth, &spec).unwrap();
        let est = solve_pnp_cold(&intr, &spec, &cs).unwrap();
        for e in est.error_to(&truth) {
            prop_assert!(e.abs() <= 1e-6);
        }
    }

    #[test]
    fn pnp_converges_from_a_nearby_prior(truth in pose(), dx in -2.0f64..2.0, dz in -3.0f64..3.0, dyaw in -20.0f64..20.0) {
        let intr = CameraIntrinsics::default();
        let spec = MarkerSpec::large();
        let cs = project_corners(&intr, &truth, &spec).unwrap();
        let prior = RelPose::new(truth.x + dx, truth.y - dx, (truth.z + dz).max(1.0), truth.yaw + dyaw);
        let est = solve_pnp(&intr, &spec, &cs, &prior).unwrap();
        for e in est.error_to(&truth) {
            prop_assert!(e.abs() <= 1e-6);
        }
    }

    #[test]
    fn equal_inputs_merge_identically_in_every_stage(a in prop::array::uniform4(-50.0f64..50.0), w in prop::array::uniform4(0.0f64..=1.0)) {
        let p = RelPose::from_array(a);
        let w = WeightSet::from_array(w);
        let s1 = merge(StageId::S1, Some(&p), None, &w).unwrap();
        let s2 = merge(StageId::S2, Some(&p), Some(&p), &w).unwrap();
        let s3 = merge(StageId::S3, None, Some(&p), &w).unwrap();
        for f in [s2, s3] {
            prop_assert!((f.e_x - s1.e_x).abs() < 1e-9 && (f.e_y - s1.e_y).abs() < 1e-9);
            prop_assert!((f.e_z - s1.e_z).abs() < 1e-9 && (f.e_psi - s1.e_psi).abs() < 1e-9);
        }
    }

    #[test]
    fn planner_is_deterministic(seq in prop::collection::vec(planner_input(), 1..150)) {
        let cfg = PlannerConfig::default();
        let run = || {
            let mut s = PlannerState::new();
            let mut out = Vec::new();
            for (i, inp) in seq.iter().enumerate() {
                let (n, sp) = planner_step(&s, &to_input(i as f64 / 30.0, *inp), &cfg);
                s = n;
                out.push((s.phase, sp));
            }
            out
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn position_setpoints_respect_the_envelope(seq in prop::collection::vec(planner_input(), 1..150)) {
        let cfg = PlannerConfig::default();
        let mut s = PlannerState::new();
        for (i, inp) in seq.iter().enumerate() {
            let (n, sp) = planner_step(&s, &to_input(i as f64 / 30.0, *inp), &cfg);
            s = n;
            if sp.mode == SetpointMode::Position {
                prop_assert!(sp.z_d <= cfg.ceiling_z && sp.z_d >= cfg.floor_z);
            }
            prop_assert!(sp.psi_d > -180.0 && sp.psi_d <= 180.0);
        }
    }

    #[test]
    fn dynamics_never_exceed_limits(
        start in prop::array::uniform4(-100.0f64..100.0),
        targets in prop::collection::vec(prop::array::uniform4(-500.0f64..500.0), 1..60),
    ) {
        let cm = ControllerModel::default();
        let mut d = DroneState::at(start[0], start[1], start[2], start[3]);
        for t in targets {
            let sp = perch::planner::Setpoint { x_d: t[0], y_d: t[1], z_d: t[2], psi_d: t[3], mode: SetpointMode::Position };
            d = step_dynamics(&d, &sp, &cm, 1.0 / 30.0, false);
            prop_assert!(d.is_finite());
            prop_assert!(d.velocity[0].hypot(d.velocity[1]) <= cm.v_max_xy + 1e-9);
            prop_assert!(d.velocity[2].abs() <= cm.v_max_z + 1e-9);
            prop_assert!(d.yaw_rate.abs() <= cm.yaw_rate_max + 1e-9);
            prop_assert!(d.yaw > -180.0 && d.yaw <= 180.0);
        }
    }
}
