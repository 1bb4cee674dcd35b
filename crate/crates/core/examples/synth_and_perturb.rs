//! Generate a homophilous benchmark, then lower its edge homophily by
//! injecting cross-class edges.

use hetbot::graph::{
    edge_homophily, perturb_to_homophily, synth_graph, SynthConfig, PERTURB_RELATION,
};

fn main() -> hetbot::Result<()> {
    let (g, _, labels) = synth_graph(&SynthConfig {
        target_edge_homophily: 0.8,
        seed: 1,
        ..Default::default()
    })?;
    println!(
        "generated {} edges, edge homophily {:.3}",
        g.num_edges(),
        edge_homophily(&g, &labels)?
    );

    for target in [0.6, 0.4, 0.2] {
        let p = perturb_to_homophily(&g, &labels, target, 7)?;
        let added = p.relation(PERTURB_RELATION).map_or(0, |r| r.len());
        println!(
            "target {target}: added {added:>5} edges, edge homophily {:.3}",
            edge_homophily(&p, &labels)?
        );
    }

    // homophily can only go down this way
    assert!(perturb_to_homophily(&g, &labels, 0.95, 7).is_err());
    Ok(())
}
