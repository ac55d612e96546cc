use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{HgedError, PairData};
use crate::hetgraph::HetGraph;

/// Largest graph `hged_astar` accepts.
pub const MAX_ASTAR_NODES: usize = 16;
pub const DEFAULT_EXPANSION_LIMIT: usize = 5_000_000;

const OPEN: u8 = u8::MAX;
const DELETED: u8 = u8::MAX - 1;

/// Assignment of one source node inside a [`SearchState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Open,
    Deleted,
    Mapped(usize),
}

/// A partial source-to-target node mapping with its incurred cost and
/// admissible remaining-cost bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchState {
    pub slots: Vec<Slot>,
    pub g_cost: u32,
    pub h_cost: u32,
}

impl SearchState {
    pub fn root(source_nodes: usize) -> Self {
        Self { slots: vec![Slot::Open; source_nodes], g_cost: 0, h_cost: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub cost: u32,
    /// `mapping[u]` is the target of source node `u`, `None` when deleted.
    pub mapping: Vec<Option<usize>>,
    pub expansions: usize,
}

/// Lower bound on the cost still to be paid from `state`.
///
/// Node part: type-multiset difference between open source nodes and unused
/// target nodes. Edge part: for every assigned source node, the per-type
/// count difference between its edges into open source nodes and its
/// image's edges into unused target nodes (all of them when deleted), plus
/// the per-type count difference of edges lying entirely among open source
/// nodes versus entirely among unused target nodes. The three edge groups
/// can only be matched within themselves, so the sum never exceeds the true
/// completion cost.
pub fn heuristic_lower_bound(
    state: &SearchState,
    g1: &HetGraph,
    g2: &HetGraph,
) -> Result<u32, HgedError> {
    check_sizes(g1, g2)?;
    let p = PairData::new(g1, g2)?;
    let (map, used) = compact(&state.slots);
    Ok(Bounder::new(&p).bound(&map, used))
}

fn compact(slots: &[Slot]) -> ([u8; MAX_ASTAR_NODES], u32) {
    let mut map = [OPEN; MAX_ASTAR_NODES];
    let mut used = 0u32;
    for (u, s) in slots.iter().enumerate() {
        map[u] = match *s {
            Slot::Open => OPEN,
            Slot::Deleted => DELETED,
            Slot::Mapped(v) => {
                used |= 1 << v;
                v as u8
            }
        };
    }
    (map, used)
}

fn check_sizes(g1: &HetGraph, g2: &HetGraph) -> Result<(), HgedError> {
    let n = g1.num_nodes().max(g2.num_nodes());
    if n > MAX_ASTAR_NODES {
        return Err(HgedError::TooLarge { nodes: n, bound: MAX_ASTAR_NODES });
    }
    Ok(())
}

struct Bounder<'a> {
    p: &'a PairData,
    node_types: usize,
    edge_types: usize,
}

impl<'a> Bounder<'a> {
    fn new(p: &'a PairData) -> Self {
        let node_types = p.t1.iter().chain(&p.t2).map(|&t| t + 1).max().unwrap_or(0);
        let mut all = 0u64;
        for row in p.a1.iter().chain(&p.a2) {
            for &m in row {
                all |= m;
            }
        }
        let edge_types = 64 - all.leading_zeros() as usize;
        Self { p, node_types, edge_types }
    }

    fn bound(&self, map: &[u8; MAX_ASTAR_NODES], used: u32) -> u32 {
        let p = self.p;
        let open1 = |u: usize| map[u] == OPEN;
        let free2 = |v: usize| used & (1 << v) == 0;

        let mut counts = [0i32; 64];
        let nt = self.node_types;
        for u in (0..p.n1).filter(|&u| open1(u)) {
            counts[p.t1[u]] += 1;
        }
        for v in (0..p.n2).filter(|&v| free2(v)) {
            counts[p.t2[v]] -= 1;
        }
        let mut total: u32 = counts[..nt].iter().map(|c| c.unsigned_abs()).sum();

        let et = self.edge_types;
        let mut inner = [0i32; 64];
        for u in 0..p.n1 {
            let assigned = !open1(u);
            let mut cross = [0i32; 64];
            for w in 0..p.n1 {
                if w == u || !open1(w) {
                    continue;
                }
                if assigned {
                    add_bits(&mut cross, p.a1[u][w], 1);
                } else if w > u {
                    add_bits(&mut inner, p.a1[u][w], 1);
                }
            }
            if assigned {
                let x = map[u];
                if x != DELETED {
                    let x = x as usize;
                    for y in (0..p.n2).filter(|&y| free2(y)) {
                        add_bits(&mut cross, p.a2[x][y], -1);
                    }
                }
                total += cross[..et].iter().map(|c| c.unsigned_abs()).sum::<u32>();
            }
        }
        for v in (0..p.n2).filter(|&v| free2(v)) {
            for x in (v + 1..p.n2).filter(|&x| free2(x)) {
                add_bits(&mut inner, p.a2[v][x], -1);
            }
        }
        total + inner[..et].iter().map(|c| c.unsigned_abs()).sum::<u32>()
    }
}

fn add_bits(counts: &mut [i32; 64], mut mask: u64, delta: i32) {
    while mask != 0 {
        counts[mask.trailing_zeros() as usize] += delta;
        mask &= mask - 1;
    }
}

#[derive(Clone)]
struct Entry {
    f: u32,
    g: u32,
    depth: u8,
    done: bool,
    seq: u64,
    used: u32,
    map: [u8; MAX_ASTAR_NODES],
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Max-heap: lowest f first, then completed, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.done.cmp(&other.done))
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Source nodes ordered so that each next node has the most edges into the
/// already-ordered prefix (then highest degree, then lowest index).
fn assignment_order(p: &PairData) -> Vec<usize> {
    let deg: Vec<u32> = (0..p.n1).map(|u| p.a1[u].iter().map(|m| m.count_ones()).sum()).collect();
    let mut order = Vec::with_capacity(p.n1);
    let mut placed = vec![false; p.n1];
    for _ in 0..p.n1 {
        let next = (0..p.n1)
            .filter(|&u| !placed[u])
            .max_by(|&a, &b| {
                let link = |u: usize| -> u32 {
                    order.iter().map(|&w: &usize| p.a1[u][w].count_ones()).sum()
                };
                link(a).cmp(&link(b)).then(deg[a].cmp(&deg[b])).then(b.cmp(&a))
            })
            .expect("an unplaced node remains");
        placed[next] = true;
        order.push(next);
    }
    order
}

struct Search<'a> {
    p: &'a PairData,
    order: Vec<usize>,
    bounder: Bounder<'a>,
}

impl Search<'_> {
    /// Cost added by assigning `u` (the node at `depth`) to `target`.
    fn step_cost(&self, map: &[u8; MAX_ASTAR_NODES], depth: usize, u: usize, target: u8) -> u32 {
        let p = self.p;
        let mut c = if target == DELETED {
            1
        } else if p.t1[u] != p.t2[target as usize] {
            2
        } else {
            0
        };
        for &w in &self.order[..depth] {
            let a = p.a1[u][w];
            let x = map[w];
            c += if target != DELETED && x != DELETED {
                (a ^ p.a2[target as usize][x as usize]).count_ones()
            } else {
                a.count_ones()
            };
        }
        c
    }

    /// Insertion cost of unused target nodes and every target edge touching one.
    fn completion_cost(&self, used: u32) -> u32 {
        let p = self.p;
        let free = |v: usize| used & (1 << v) == 0;
        let mut c = (0..p.n2).filter(|&v| free(v)).count() as u32;
        for v in 0..p.n2 {
            for x in v + 1..p.n2 {
                if free(v) || free(x) {
                    c += p.a2[v][x].count_ones();
                }
            }
        }
        c
    }

    fn greedy_upper_bound(&self) -> u32 {
        let mut map = [OPEN; MAX_ASTAR_NODES];
        let mut used = 0u32;
        let mut g = 0;
        for (depth, &u) in self.order.iter().enumerate() {
            let mut best = (self.step_cost(&map, depth, u, DELETED), DELETED);
            for v in 0..self.p.n2 {
                if used & (1 << v) == 0 {
                    let c = self.step_cost(&map, depth, u, v as u8);
                    if c < best.0 {
                        best = (c, v as u8);
                    }
                }
            }
            g += best.0;
            map[u] = best.1;
            if best.1 != DELETED {
                used |= 1 << best.1;
            }
        }
        g + self.completion_cost(used)
    }
}

/// Exact HGED by best-first search.
pub fn hged_astar(
    g1: &HetGraph,
    g2: &HetGraph,
    expansion_limit: Option<usize>,
) -> Result<u32, HgedError> {
    hged_astar_mapping(g1, g2, expansion_limit).map(|o| o.cost)
}

pub fn hged_astar_mapping(
    g1: &HetGraph,
    g2: &HetGraph,
    expansion_limit: Option<usize>,
) -> Result<SearchOutcome, HgedError> {
    check_sizes(g1, g2)?;
    let limit = expansion_limit.unwrap_or(DEFAULT_EXPANSION_LIMIT);
    let p = PairData::new(g1, g2)?;
    let search = Search { p: &p, order: assignment_order(&p), bounder: Bounder::new(&p) };
    let upper = search.greedy_upper_bound();
    let n1 = p.n1;

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let root_map = [OPEN; MAX_ASTAR_NODES];
    let root_h = search.bounder.bound(&root_map, 0);
    heap.push(Entry { f: root_h, g: 0, depth: 0, done: false, seq, used: 0, map: root_map });

    let mut expansions = 0usize;
    while let Some(e) = heap.pop() {
        if e.done {
            let mapping = (0..n1)
                .map(|u| (e.map[u] != DELETED).then_some(e.map[u] as usize))
                .collect();
            return Ok(SearchOutcome { cost: e.g, mapping, expansions });
        }
        expansions += 1;
        if expansions > limit {
            return Err(HgedError::ExpansionLimit { limit });
        }
        let depth = e.depth as usize;
        if depth == n1 {
            let g = e.g + search.completion_cost(e.used);
            seq += 1;
            heap.push(Entry { f: g, g, done: true, seq, ..e });
            continue;
        }
        let u = search.order[depth];
        let targets = (0..p.n2)
            .filter(|&v| e.used & (1 << v) == 0)
            .map(|v| v as u8)
            .chain(std::iter::once(DELETED));
        for target in targets {
            let g = e.g + search.step_cost(&e.map, depth, u, target);
            let mut map = e.map;
            map[u] = target;
            let used = if target == DELETED { e.used } else { e.used | (1 << target) };
            let f = g + search.bounder.bound(&map, used);
            if f > upper {
                continue;
            }
            seq += 1;
            heap.push(Entry { f, g, depth: e.depth + 1, done: false, seq, used, map });
        }
    }
    unreachable!("the greedy completion keeps at least one path within the upper bound")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::Edge;

    fn sample() -> HetGraph {
        HetGraph::new(
            "g",
            vec![0, 1, 1, 2, 0],
            vec![Edge::new(0, 1, 0), Edge::new(0, 2, 1), Edge::new(2, 3, 0), Edge::new(3, 4, 2)],
        )
    }

    #[test]
    fn zero_against_permutation() {
        let g = sample();
        assert_eq!(hged_astar(&g, &g.permuted(&[4, 2, 0, 1, 3]), None).unwrap(), 0);
    }

    #[test]
    fn root_bound_zero_for_identical() {
        let g = sample();
        assert_eq!(heuristic_lower_bound(&SearchState::root(5), &g, &g).unwrap(), 0);
    }

    #[test]
    fn full_state_bound_zero() {
        let g = sample();
        let h = HetGraph::new("h", vec![0, 1, 2], vec![Edge::new(0, 1, 0)]);
        let st = SearchState {
            slots: vec![Slot::Mapped(0), Slot::Mapped(1), Slot::Deleted, Slot::Mapped(2), Slot::Deleted],
            g_cost: 0,
            h_cost: 0,
        };
        // Every source node assigned and every target node used: nothing left.
        assert_eq!(heuristic_lower_bound(&st, &g, &h).unwrap(), 0);
    }

    #[test]
    fn expansion_limit_is_an_error() {
        let g = sample();
        let h = HetGraph::new("h", vec![2, 2, 1, 0, 0], vec![Edge::new(0, 4, 1), Edge::new(1, 2, 2)]);
        assert_eq!(hged_astar(&g, &h, Some(1)), Err(HgedError::ExpansionLimit { limit: 1 }));
    }

    #[test]
    fn size_bound() {
        let g = HetGraph::new("g", vec![0; 17], vec![]);
        assert!(matches!(hged_astar(&g, &g, None), Err(HgedError::TooLarge { .. })));
    }

    #[test]
    fn empty_graphs() {
        let e = HetGraph::new("e", vec![], vec![]);
        assert_eq!(hged_astar(&e, &e, None).unwrap(), 0);
        assert_eq!(hged_astar(&e, &sample(), None).unwrap(), 9);
    }
}
