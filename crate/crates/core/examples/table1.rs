//! Type-I error and confounder counts for one simulation setting.
//!
//! cargo run --release -p impactreg-core --example table1 -- 5 4 500 0 [reps] [theta1]

use impactreg_core::{run_study, SimConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let get = |i: usize, d: &str| args.get(i).cloned().unwrap_or_else(|| d.to_string());
    let m: usize = get(0, "5").parse().expect("m");
    let k: usize = get(1, "4").parse().expect("k");
    let n: usize = get(2, "500").parse().expect("n");
    let gamma: f64 = get(3, "0").parse().expect("gamma");
    let mut cfg = SimConfig::table1(m, k, n, gamma);
    cfg.replications = get(4, "10000").parse().expect("reps");
    cfg.theta1 = get(5, "0").parse().expect("theta1");
    let report = run_study(&cfg, None).expect("study");
    println!("{}", serde_json::to_string_pretty(&report).expect("json"));
    eprintln!("elapsed {:?}", report.elapsed);
}
