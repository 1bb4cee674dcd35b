//! Node, edge and class-insensitive homophily on a hand-made graph and on a
//! synthetic benchmark, plus the per-node histogram by class.

use hetbot::graph::{
    per_node_homophily, synth_graph, HeteroGraph, HomophilyReport, LabelSet, SynthConfig,
};

fn main() -> hetbot::Result<()> {
    let mut triangle = HeteroGraph::new(3);
    triangle.add_relation("follower", [(0, 1), (1, 2), (0, 2)])?;
    let labels = LabelSet::binary(&[0, 0, 1])?;
    let r = HomophilyReport::compute(&triangle, &labels)?;
    println!("triangle: {r:?}");

    for h in [0.2, 0.5, 0.8] {
        let (g, _, labels) = synth_graph(&SynthConfig {
            target_edge_homophily: h,
            ..Default::default()
        })?;
        let r = HomophilyReport::compute(&g, &labels)?;
        let per_node = per_node_homophily(&g, &labels);
        println!(
            "target {h}: node {:.3} edge {:.3} class-insensitive {:.3}",
            r.node_homophily, r.edge_homophily, r.class_insensitive_homophily
        );
        for (name, class) in [("human", LabelSet::HUMAN), ("bot", LabelSet::BOT)] {
            println!(
                "  {name:<5} bins {:?}",
                per_node.histogram_for_class(&labels, class).bins
            );
        }
    }
    Ok(())
}
