use perch::sim::{gap_trace, GapDemo, ScenarioConfig};

// Target moves at a constant rate, detections drop out for one second.
fn main() {
    let cfg = ScenarioConfig::default();
    let demo = GapDemo::default();
    let trace = gap_trace(&cfg, &demo).unwrap();

    println!("tick  gap   truth_x  filt_x   fresh");
    for r in trace.iter().step_by(5) {
        let f = r.filtered[0].map_or(f64::NAN, |p| p.x);
        let fresh = r.fused.is_some_and(|p| p.fresh);
        println!(
            "{:4}  {:5} {:7.2}  {:7.2}  {}",
            r.tick,
            demo.in_gap(r.tick),
            r.truth.x,
            f,
            fresh
        );
    }
}
