//! All six variants on one strongly heterophilous benchmark.
//!
//! `cargo run --release --example ablation_study -- 3` averages over three seeds.

use hetbot::experiments::{ablation_study, mean_metric, Benchmark};
use hetbot::train::AblationVariant;

fn main() -> hetbot::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let seeds: Vec<u64> = (0..seeds).collect();
    let records = ablation_study(&Benchmark::desk(), 0.1, &seeds)?;
    for v in AblationVariant::ALL {
        let acc = mean_metric(&records, v.name(), 0.1, "accuracy").unwrap_or(f64::NAN);
        let f1 = mean_metric(&records, v.name(), 0.1, "f1").unwrap_or(f64::NAN);
        println!("{:<18} accuracy {acc:.4}  f1 {f1:.4}", v.name());
    }
    Ok(())
}
