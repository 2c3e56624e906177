use perch::geometry::{CameraIntrinsics, RelPose};
use perch::sim::{replay_estimation, stationary_trace, ScenarioConfig};

// Holds the vehicle still at a few poses and reports estimate spread.
fn main() {
    // wider lens so the off-axis points stay in frame
    let cfg = ScenarioConfig {
        camera: CameraIntrinsics::new(130.0, 130.0, 320.0, 240.0, 640, 480).unwrap(),
        ..ScenarioConfig::default()
    };

    let poses = [
        RelPose::new(0.0, 0.0, 30.0, 0.0),
        RelPose::new(5.0, -7.0, 11.0, 0.0),
        RelPose::new(-10.0, 11.0, 7.0, 0.0),
        RelPose::new(0.0, 0.0, 24.0, -90.0),
    ];
    for p in poses {
        let trace = stationary_trace(&cfg, p, 100).unwrap();
        let seg = replay_estimation(&trace, 10).segments[0];
        let err = seg.max_abs_error.unwrap();
        println!(
            "({:5.1},{:5.1},{:5.1},{:6.1})  p2p {:.3?}  max|err| {:.3?}",
            p.x, p.y, p.z, p.yaw, seg.peak_to_peak.unwrap(), err
        );
    }
}
