use perch::geometry::{project_corners, CameraIntrinsics, MarkerSpec, RelPose};
use perch::pnp::{reprojection_cost, solve_pnp_cold};
use perch::sim::checks::pnp_round_trip;
use perch::sim::ScenarioConfig;

fn main() {
    let intr = CameraIntrinsics::default();
    let spec = MarkerSpec::large();

    // one pose by hand
    let truth = RelPose::new(3.0, -2.0, 40.0, 35.0);
    let corners = project_corners(&intr, &truth, &spec).expect("marker in front of the camera");
    println!("corners (px): {:?}", corners.0);

    let est = solve_pnp_cold(&intr, &spec, &corners).unwrap();
    println!("truth    {truth:?}");
    println!("estimate {est:?}");
    println!("reprojection cost {:.3e}", reprojection_cost(&intr, &spec, &corners, &est));

    // and a batch over random poses
    let cfg = ScenarioConfig::default();
    let rep = pnp_round_trip(&cfg.camera, &cfg.target, 1000, 7);
    println!(
        "{} poses, {} failures, max err {:.2e} cm / {:.2e} deg",
        rep.n, rep.failures, rep.max_translation_error_cm, rep.max_yaw_error_deg
    );
}
