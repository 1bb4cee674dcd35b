//! Train the feature MLP, build cosine k-NN graphs over its hidden layer and
//! compare their homophily with the observed graph's.

use hetbot::experiments::{knn_homophily_sweep, Benchmark};
use hetbot::graph::edge_homophily;
use hetbot::train::TrainConfig;

fn main() -> hetbot::Result<()> {
    let mut bench = Benchmark::desk();
    bench.synth.class_mean_separation = 4.0;
    let ds = bench.instance(0.2, 0)?;
    println!(
        "observed graph: edge homophily {:.3}",
        edge_homophily(&ds.graph, &ds.labels)?
    );

    let mlp = TrainConfig {
        seed: 0,
        ..bench.train.clone()
    }
    .mlp_config();
    let rows = knn_homophily_sweep(&ds, &[1, 2, 5, 10], &mlp, 0)?;
    for r in rows {
        println!("k = {:>2}  {:<24} {:.3}", r.level, r.metric, r.value);
    }
    Ok(())
}
