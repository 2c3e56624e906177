use perch::fusion::{fit_weights_lms, WeightSet, DEFAULT_LMS_EPOCHS, DEFAULT_LMS_STEP};
use perch::sim::checks::{collect_stage2_samples, synthetic_lms_samples};
use perch::sim::ScenarioConfig;

fn main() {
    // synthetic data with known weights first
    let truth = WeightSet::from_array([0.3, 0.7, 0.6, 0.4]);
    let samples = synthetic_lms_samples(&truth, 500, 0.2, 3);
    let fit = fit_weights_lms(&samples, DEFAULT_LMS_STEP, DEFAULT_LMS_EPOCHS).unwrap();
    println!("known  {:?}", truth.to_array());
    println!("fitted {:?}", fit.weights.to_array());

    // then from the simulator, both markers in view
    let cfg = ScenarioConfig::default();
    let samples = collect_stage2_samples(&cfg, 40, 100, 11).unwrap();
    let fit = fit_weights_lms(&samples, DEFAULT_LMS_STEP, DEFAULT_LMS_EPOCHS).unwrap();
    println!("\n{} simulated samples", samples.len());
    for (k, name) in ["x", "y", "z", "yaw"].iter().enumerate() {
        println!(
            "{name:>3}: w = {:.4}  mse {:.4} -> {:.4}",
            fit.weights.to_array()[k],
            fit.initial_cost[k],
            fit.final_cost[k]
        );
    }
}
