use perch::sim::{monte_carlo, ScenarioConfig};

fn main() {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let cfg = ScenarioConfig::default();

    for dropout in [0.0, 0.1, 0.3, 0.6] {
        let mut c = cfg.clone();
        c.noise.dropout_p = dropout;
        let s = monte_carlo(&c, runs, 1000, None).unwrap();
        println!(
            "dropout {dropout:.1}: success {:.3}  landed {:3}  timeout {:3}  p95 err {:?} cm  mean ticks {:.0}",
            s.success_rate, s.safety_landed, s.timeouts, s.p95_final_error_cm, s.mean_ticks
        );
    }
}
