use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatasetError;
use crate::hetgraph::{Edge, HetGraph};

/// Zipf-like node-type weighting `1/(k+1)`, normalized to sum to 1.
pub fn type_weights(node_types: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..node_types).map(|k| 1.0 / (k + 1) as f64).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Edge types allowed between endpoint types `a` and `b`.
pub fn compatible_edge_types(a: usize, b: usize, edge_types: usize) -> Vec<usize> {
    let base = (a + b) % edge_types;
    let mut out = vec![base];
    if edge_types > 1 {
        out.push((base + 1) % edge_types);
    }
    out
}

/// Exact per-type node counts by largest remainder.
fn type_counts(weights: &[f64], nodes: usize) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * nodes as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut short = nodes - counts.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..weights.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for k in by_remainder {
        if short == 0 {
            break;
        }
        counts[k] += 1;
        short -= 1;
    }
    counts
}

/// Random typed source graph, deterministic in `seed`.
pub fn synth_source_graph(
    node_types: usize,
    edge_types: usize,
    nodes: usize,
    mean_degree: f64,
    seed: u64,
) -> Result<HetGraph, DatasetError> {
    if node_types == 0 || edge_types == 0 || nodes == 0 {
        return Err(DatasetError::InvalidSpec("type and node counts must be at least 1".into()));
    }
    if !(mean_degree >= 0.0) || mean_degree > (nodes - 1) as f64 {
        return Err(DatasetError::InvalidSpec(format!(
            "mean degree {mean_degree} impossible with {nodes} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut types = Vec::with_capacity(nodes);
    for (k, c) in type_counts(&type_weights(node_types), nodes).into_iter().enumerate() {
        types.extend(std::iter::repeat(k).take(c));
    }
    types.shuffle(&mut rng);

    let max_pairs = nodes * (nodes - 1) / 2;
    let target = ((nodes as f64 * mean_degree / 2.0).round() as usize).min(max_pairs);
    let pairs: Vec<(usize, usize)> = if target * 2 > max_pairs {
        let mut all: Vec<(usize, usize)> =
            (0..nodes).flat_map(|a| (a + 1..nodes).map(move |b| (a, b))).collect();
        all.shuffle(&mut rng);
        all.truncate(target);
        all
    } else {
        let mut seen = HashSet::with_capacity(target);
        let mut out = Vec::with_capacity(target);
        while out.len() < target {
            let a = rng.gen_range(0..nodes);
            let b = rng.gen_range(0..nodes);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                out.push((a.min(b), a.max(b)));
            }
        }
        out
    };
    let edges = pairs
        .into_iter()
        .map(|(a, b)| {
            let allowed = compatible_edge_types(types[a], types[b], edge_types);
            Edge::new(a, b, allowed[rng.gen_range(0..allowed.len())])
        })
        .collect();
    Ok(HetGraph::new("source", types, edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{serialize_graph, validate_graph, TypeVocab};

    #[test]
    fn single_node() {
        let g = synth_source_graph(3, 3, 1, 0.0, 1).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn deterministic() {
        let v = TypeVocab::numbered(3, 3);
        let a = synth_source_graph(3, 3, 300, 2.5, 9).unwrap();
        let b = synth_source_graph(3, 3, 300, 2.5, 9).unwrap();
        assert_eq!(serialize_graph(&a, &v), serialize_graph(&b, &v));
        assert_eq!(validate_graph(&a, &v), Ok(()));
    }

    #[test]
    fn histogram_follows_weighting() {
        let n = 10_000;
        let g = synth_source_graph(4, 2, n, 1.0, 5).unwrap();
        let w = type_weights(4);
        for (k, c) in g.node_type_counts(4).into_iter().enumerate() {
            let frac = c as f64 / n as f64;
            assert!((frac - w[k]).abs() <= 0.05 * w[k], "type {k}: {frac} vs {}", w[k]);
        }
    }

    #[test]
    fn mean_degree_matches() {
        let g = synth_source_graph(3, 3, 1000, 3.0, 2).unwrap();
        assert_eq!(g.num_edges(), 1500);
        let dense = synth_source_graph(2, 2, 10, 9.0, 2).unwrap();
        assert_eq!(dense.num_edges(), 45);
    }

    #[test]
    fn impossible_degree() {
        assert!(matches!(synth_source_graph(2, 2, 5, 4.5, 0), Err(DatasetError::InvalidSpec(_))));
        assert!(matches!(synth_source_graph(0, 2, 5, 1.0, 0), Err(DatasetError::InvalidSpec(_))));
    }

    #[test]
    fn edge_types_respect_table() {
        let g = synth_source_graph(3, 3, 500, 2.0, 4).unwrap();
        for e in &g.edges {
            let allowed = compatible_edge_types(g.node_types[e.src], g.node_types[e.dst], 3);
            assert!(allowed.contains(&e.ty));
        }
    }
}
