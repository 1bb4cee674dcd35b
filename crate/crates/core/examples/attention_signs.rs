//! Where does the trained attention go negative? Compares the mean edge
//! coefficient on same-label and cross-label edges and prints a few rows of
//! the per-edge CSV.

use hetbot::experiments::Benchmark;
use hetbot::train::{ablation_run, AblationVariant};

fn main() -> hetbot::Result<()> {
    let bench = Benchmark::desk();
    for seed in 0..2 {
        let ds = bench.instance(0.3, seed)?;
        let splits = ds.splits.clone().expect("split");
        let run = ablation_run(
            AblationVariant::Full,
            &ds.graph,
            &ds.features,
            &ds.labels,
            &splits,
            &bench.train_config(seed),
        )?;
        let s = run.train.trace.sign_summary(&ds.labels);
        println!(
            "seed {seed}: mean alpha_bar homophilic {:+.3} heterophilic {:+.3}; negative share {:.3} vs {:.3}",
            s.homo_mean, s.hetero_mean, s.homo_negative, s.hetero_negative
        );
        if seed == 0 {
            let mut csv = Vec::new();
            run.train.trace.write_csv(&ds.labels, &mut csv)?;
            for line in String::from_utf8_lossy(&csv).lines().take(6) {
                println!("  {line}");
            }
        }
    }
    Ok(())
}
