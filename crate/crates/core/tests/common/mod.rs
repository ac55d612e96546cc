#![allow(dead_code)]

pub mod metric_oracles;

use hegmn::hetgraph::{Edge, HetGraph};
use rand::Rng;

/// Random typed graph with `1..=max_nodes` nodes. Node pairs occasionally
/// carry two edge types.
pub fn random_graph(
    rng: &mut impl Rng,
    id: &str,
    max_nodes: usize,
    node_types: usize,
    edge_types: usize,
    edge_prob: f64,
) -> HetGraph {
    let n = rng.gen_range(1..=max_nodes);
    let types = (0..n).map(|_| rng.gen_range(0..node_types)).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(edge_prob) {
                let t = rng.gen_range(0..edge_types);
                edges.push(Edge::new(a, b, t));
                if edge_types > 1 && rng.gen_bool(0.1) {
                    edges.push(Edge::new(a, b, (t + 1) % edge_types));
                }
            }
        }
    }
    HetGraph::new(id, types, edges)
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
