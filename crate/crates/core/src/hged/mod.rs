//! Exact heterogeneous graph edit distance.
//!
//! Unit costs throughout: inserting or deleting a node or an edge costs 1.
//! Changing the type of a node or edge costs 2, one deletion of the old
//! element plus one insertion of the retyped element with the same
//! structural attributes. Deleting a node does not delete its incident edges
//! for free; each one is charged separately.
//!
//! Every solver minimizes over node mappings: each source node is sent to a
//! distinct target node or deleted, and the edge costs follow from the
//! mapping. [`hged_brute`] enumerates all mappings, [`hged_astar`] searches
//! them best-first under an admissible bound.

mod astar;
mod brute;
mod path;

pub use astar::{
    heuristic_lower_bound, hged_astar, hged_astar_mapping, SearchOutcome, SearchState, Slot,
    DEFAULT_EXPANSION_LIMIT, MAX_ASTAR_NODES,
};
pub use brute::{hged_brute, hged_brute_mapping, BRUTE_MAX_NODES};
pub use path::{apply_edit_path, edit_path_from_mapping, EditOp, EditPath};

use thiserror::Error;

use crate::hetgraph::HetGraph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HgedError {
    #[error("graph with {nodes} nodes exceeds the solver bound of {bound}")]
    TooLarge { nodes: usize, bound: usize },
    #[error("expansion limit of {limit} states exceeded")]
    ExpansionLimit { limit: usize },
    #[error("edge type {0} exceeds the 64 types supported by the solver")]
    TooManyEdgeTypes(usize),
    #[error("invalid edit path: {0}")]
    InvalidPath(String),
}

/// `exp(-d / ((n + m) / 2))`, the similarity label in `(0, 1]`.
pub fn normalize_hged(d: f64, n: usize, m: usize) -> f64 {
    (-d / ((n + m) as f64 / 2.0)).exp()
}

/// Node counts, types and per-pair edge-type bitmasks for both graphs.
pub(crate) struct PairData {
    pub n1: usize,
    pub n2: usize,
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub a1: Vec<Vec<u64>>,
    pub a2: Vec<Vec<u64>>,
}

impl PairData {
    pub fn new(g1: &HetGraph, g2: &HetGraph) -> Result<Self, HgedError> {
        for g in [g1, g2] {
            if let Some(e) = g.edges.iter().find(|e| e.ty >= 64) {
                return Err(HgedError::TooManyEdgeTypes(e.ty));
            }
        }
        Ok(Self {
            n1: g1.num_nodes(),
            n2: g2.num_nodes(),
            t1: g1.node_types.clone(),
            t2: g2.node_types.clone(),
            a1: crate::hetgraph::iso_type_masks(g1),
            a2: crate::hetgraph::iso_type_masks(g2),
        })
    }
}

/// Cost of the edit path induced by a complete node mapping
/// (`map[u] = Some(v)` or `None` for deletion), recomputed from scratch.
pub fn mapping_cost(g1: &HetGraph, g2: &HetGraph, map: &[Option<usize>]) -> u32 {
    let p = PairData::new(g1, g2).expect("edge types fit the solver");
    mapping_cost_with(&p, map)
}

pub(crate) fn mapping_cost_with(p: &PairData, map: &[Option<usize>]) -> u32 {
    let mut cost = 0u32;
    let mut image = vec![false; p.n2];
    for (u, m) in map.iter().enumerate() {
        match *m {
            None => cost += 1,
            Some(v) => {
                image[v] = true;
                if p.t1[u] != p.t2[v] {
                    cost += 2;
                }
            }
        }
    }
    cost += image.iter().filter(|&&b| !b).count() as u32;
    for u in 0..p.n1 {
        for w in u + 1..p.n1 {
            let a = p.a1[u][w];
            cost += match (map[u], map[w]) {
                (Some(v), Some(x)) => (a ^ p.a2[v][x]).count_ones(),
                _ => a.count_ones(),
            };
        }
    }
    for v in 0..p.n2 {
        for x in v + 1..p.n2 {
            if !(image[v] && image[x]) {
                cost += p.a2[v][x].count_ones();
            }
        }
    }
    cost
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_values() {
        assert_eq!(normalize_hged(0.0, 3, 7), 1.0);
        assert!((normalize_hged(2.0, 4, 4) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((normalize_hged(2.0, 4, 4) - 0.606531).abs() < 1e-6);
        let mut prev = normalize_hged(0.0, 5, 6);
        for d in 1..40 {
            let s = normalize_hged(d as f64, 5, 6);
            assert!(s < prev && s > 0.0);
            prev = s;
        }
    }
}
