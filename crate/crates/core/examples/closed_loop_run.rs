use std::fs::File;
use std::io::BufWriter;

use perch::sim::{run_scenario, write_trace_csv, ScenarioConfig};

fn main() {
    // optional path to a TOML config, e.g. configs/nominal.toml
    let cfg = match std::env::args().nth(1) {
        Some(p) => ScenarioConfig::load(p.as_ref()).unwrap(),
        None => ScenarioConfig::default(),
    };
    let (outcome, trace) = run_scenario(&cfg).unwrap();
    println!("{}", toml::to_string(&outcome).unwrap());

    let path = std::env::temp_dir().join("perch_trace.csv");
    write_trace_csv(BufWriter::new(File::create(&path).unwrap()), &trace).unwrap();
    println!("trace: {} rows -> {}", trace.len(), path.display());
}
