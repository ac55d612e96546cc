use super::{mapping_cost_with, HgedError, PairData};
use crate::hetgraph::HetGraph;

/// Largest graph `hged_brute` accepts.
pub const BRUTE_MAX_NODES: usize = 7;

/// Exact HGED by enumerating every injective partial node mapping.
pub fn hged_brute(g1: &HetGraph, g2: &HetGraph) -> Result<u32, HgedError> {
    hged_brute_mapping(g1, g2).map(|(c, _)| c)
}

/// Minimum cost and one mapping attaining it.
pub fn hged_brute_mapping(
    g1: &HetGraph,
    g2: &HetGraph,
) -> Result<(u32, Vec<Option<usize>>), HgedError> {
    let n = g1.num_nodes().max(g2.num_nodes());
    if n > BRUTE_MAX_NODES {
        return Err(HgedError::TooLarge { nodes: n, bound: BRUTE_MAX_NODES });
    }
    let p = PairData::new(g1, g2)?;
    let mut best = (u32::MAX, Vec::new());
    let mut map = vec![None; p.n1];
    let mut used = vec![false; p.n2];
    enumerate(&p, 0, &mut map, &mut used, &mut best);
    Ok(best)
}

fn enumerate(
    p: &PairData,
    u: usize,
    map: &mut Vec<Option<usize>>,
    used: &mut [bool],
    best: &mut (u32, Vec<Option<usize>>),
) {
    if u == p.n1 {
        let c = mapping_cost_with(p, map);
        if c < best.0 {
            *best = (c, map.clone());
        }
        return;
    }
    map[u] = None;
    enumerate(p, u + 1, map, used, best);
    for v in 0..p.n2 {
        if !used[v] {
            used[v] = true;
            map[u] = Some(v);
            enumerate(p, u + 1, map, used, best);
            map[u] = None;
            used[v] = false;
        }
    }
}
