//! Write a benchmark as a CSV bundle and load it back, the way the command
//! line hands data from one step to the next.

use hetbot::dataset::{load_dataset, write_dataset};
use hetbot::experiments::Benchmark;

fn main() -> hetbot::Result<()> {
    let ds = Benchmark::desk().instance(0.4, 2)?;
    let dir = std::env::temp_dir().join("hetbot_bundle_example");
    for path in write_dataset(&dir, &ds)? {
        println!("wrote {}", path.display());
    }
    let (back, report) = load_dataset(&dir, None)?;
    assert_eq!(back.graph, ds.graph);
    assert_eq!(back.features, ds.features);
    println!(
        "reloaded {} nodes; edges per relation {:?}",
        report.num_nodes, report.edges_kept
    );
    Ok(())
}
