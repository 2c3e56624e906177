use perch::fusion::{classify_stage, merge, WeightSet};
use perch::geometry::RelPose;

fn main() {
    let w = WeightSet::default();
    let m1 = RelPose::new(1.0, 0.5, 30.0, 178.0);
    let m2 = RelPose::new(1.4, 0.2, 29.6, -176.0);

    for (a, b) in [(true, false), (true, true), (false, true), (false, false)] {
        let Some(stage) = classify_stage(a, b) else {
            println!("m1={a} m2={b}: nothing to fuse");
            continue;
        };
        let f = merge(stage, a.then_some(&m1), b.then_some(&m2), &w).unwrap();
        // yaw merges across the +-180 seam
        println!("m1={a} m2={b}: {} -> {:?}", stage.label(), f.as_rel_pose());
    }
}
