//! Fixture networks shared by the criterion benches.

use tpsim_core::sbm::{generate_sbm, SbmSpec};
use tpsim_core::Graph;

/// Ten-block planted network with mean degree 15 and `p_in / p_out = 20`.
pub fn planted_network(nodes: usize, seed: u64) -> Graph {
    let spec = SbmSpec::planted(nodes, 10, 15.0, 20.0, seed).expect("valid planted spec");
    generate_sbm(&spec).expect("generation succeeds").graph
}

/// `count` evenly spaced source nodes.
pub fn sources(g: &Graph, count: usize) -> Vec<usize> {
    let n = g.node_count();
    let step = (n / count.max(1)).max(1);
    (0..n).step_by(step).take(count).collect()
}
