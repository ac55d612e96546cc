use super::{GraphError, HetGraph};

pub const BRUTE_ISO_MAX_NODES: usize = 8;

/// Edge-type bitmask per ordered node pair.
pub(crate) fn type_masks(g: &HetGraph) -> Vec<Vec<u64>> {
    let n = g.num_nodes();
    let mut m = vec![vec![0u64; n]; n];
    for e in &g.edges {
        m[e.src][e.dst] |= 1 << e.ty;
        m[e.dst][e.src] |= 1 << e.ty;
    }
    m
}

/// Exhaustive search for a type-preserving bijection carrying edges onto
/// edges with identical types.
pub fn brute_isomorphic(g1: &HetGraph, g2: &HetGraph) -> Result<bool, GraphError> {
    let n = g1.num_nodes().max(g2.num_nodes());
    if n > BRUTE_ISO_MAX_NODES {
        return Err(GraphError::TooLarge { nodes: n, bound: BRUTE_ISO_MAX_NODES });
    }
    if g1.num_nodes() != g2.num_nodes() || g1.num_edges() != g2.num_edges() {
        return Ok(false);
    }
    let mut t1 = g1.node_types.clone();
    let mut t2 = g2.node_types.clone();
    t1.sort_unstable();
    t2.sort_unstable();
    if t1 != t2 {
        return Ok(false);
    }
    let a1 = type_masks(g1);
    let a2 = type_masks(g2);
    let mut map = vec![usize::MAX; g1.num_nodes()];
    let mut used = vec![false; g2.num_nodes()];
    Ok(extend(0, g1, g2, &a1, &a2, &mut map, &mut used))
}

fn extend(
    u: usize,
    g1: &HetGraph,
    g2: &HetGraph,
    a1: &[Vec<u64>],
    a2: &[Vec<u64>],
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    if u == map.len() {
        return true;
    }
    for v in 0..used.len() {
        if used[v] || g1.node_types[u] != g2.node_types[v] {
            continue;
        }
        if (0..u).any(|w| a1[u][w] != a2[v][map[w]]) {
            continue;
        }
        map[u] = v;
        used[v] = true;
        if extend(u + 1, g1, g2, a1, a2, map, used) {
            return true;
        }
        used[v] = false;
    }
    map[u] = usize::MAX;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::Edge;

    fn sample() -> HetGraph {
        HetGraph::new(
            "g",
            vec![0, 1, 1, 2],
            vec![Edge::new(0, 1, 0), Edge::new(0, 2, 1), Edge::new(2, 3, 0)],
        )
    }

    #[test]
    fn permuted_copy_is_isomorphic() {
        let g = sample();
        assert!(brute_isomorphic(&g, &g.permuted(&[3, 1, 0, 2])).unwrap());
    }

    #[test]
    fn node_count_mismatch() {
        let g = sample();
        let h = HetGraph::new("h", vec![0, 1, 1], vec![Edge::new(0, 1, 0)]);
        assert!(!brute_isomorphic(&g, &h).unwrap());
    }

    #[test]
    fn retyped_node_breaks_isomorphism() {
        let g = sample();
        let mut h = g.clone();
        h.node_types[3] = 0;
        assert!(!brute_isomorphic(&g, &h).unwrap());
    }

    #[test]
    fn edge_type_swap_breaks_isomorphism() {
        let g = sample();
        let h = HetGraph::new(
            "h",
            vec![0, 1, 1, 2],
            vec![Edge::new(0, 1, 1), Edge::new(0, 2, 0), Edge::new(2, 3, 0)],
        );
        // Both have one type-1 edge at node 0, but the type-0 edge hangs off
        // differently.
        assert!(!brute_isomorphic(&g, &h).unwrap());
    }

    #[test]
    fn size_bound() {
        let g = HetGraph::new("big", vec![0; 9], vec![]);
        assert!(matches!(brute_isomorphic(&g, &g), Err(GraphError::TooLarge { .. })));
    }
}
