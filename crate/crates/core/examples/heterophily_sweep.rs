//! Accuracy of the full model and of mean pooling as edge homophily varies,
//! written as long-format CSV.

use hetbot::experiments::{homophily_sweep, levels, mean_metric, write_long_csv, Benchmark};
use hetbot::train::AblationVariant;

fn main() -> hetbot::Result<()> {
    let variants = [AblationVariant::Full, AblationVariant::MeanPooling];
    let records = homophily_sweep(&Benchmark::desk(), &[0.1, 0.5, 0.9], &[0], &variants)?;
    for h in levels(&records) {
        let full = mean_metric(&records, "full", h, "accuracy").unwrap_or(f64::NAN);
        let mp = mean_metric(&records, "mean_pooling", h, "accuracy").unwrap_or(f64::NAN);
        println!("h = {h:.1}: full {full:.4}  mean pooling {mp:.4}");
    }
    let path = std::env::temp_dir().join("hetbot_heterophily_sweep.csv");
    write_long_csv(&path, &records)?;
    println!("{} rows in {}", records.len(), path.display());
    Ok(())
}
