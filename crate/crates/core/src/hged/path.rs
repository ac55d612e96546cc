use std::collections::BTreeSet;

use super::HgedError;
use crate::hetgraph::{iso_type_masks, Edge, HetGraph};

/// One unit-cost edit.
///
/// A type change is two ops: `DeleteNode { node }` followed by
/// `InsertNode { slot: Some(node), .. }`, which re-occupies the vacated
/// position with its incident edges intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    InsertNode { ty: usize, slot: Option<usize> },
    DeleteNode { node: usize },
    InsertEdge { src: usize, dst: usize, ty: usize },
    DeleteEdge { src: usize, dst: usize, ty: usize },
}

impl EditOp {
    pub fn cost(&self) -> u32 {
        1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditPath {
    pub ops: Vec<EditOp>,
}

impl EditPath {
    pub fn total_cost(&self) -> u32 {
        self.ops.iter().map(EditOp::cost).sum()
    }
}

/// Edit path realizing a complete node mapping. Inserted target nodes get
/// slots after the source nodes, in target index order.
pub fn edit_path_from_mapping(g1: &HetGraph, g2: &HetGraph, map: &[Option<usize>]) -> EditPath {
    let a1 = iso_type_masks(g1);
    let a2 = iso_type_masks(g2);
    let n1 = g1.num_nodes();
    let mut ops = Vec::new();

    for e in &g1.edges {
        let kept = match (map[e.src], map[e.dst]) {
            (Some(v), Some(x)) => a2[v][x] & (1 << e.ty) != 0,
            _ => false,
        };
        if !kept {
            ops.push(EditOp::DeleteEdge { src: e.src, dst: e.dst, ty: e.ty });
        }
    }
    for (u, m) in map.iter().enumerate() {
        match *m {
            None => ops.push(EditOp::DeleteNode { node: u }),
            Some(v) if g1.node_types[u] != g2.node_types[v] => {
                ops.push(EditOp::DeleteNode { node: u });
                ops.push(EditOp::InsertNode { ty: g2.node_types[v], slot: Some(u) });
            }
            Some(_) => {}
        }
    }
    let mut slot_of = vec![usize::MAX; g2.num_nodes()];
    for (u, m) in map.iter().enumerate() {
        if let Some(v) = *m {
            slot_of[v] = u;
        }
    }
    let mut next = n1;
    for v in 0..g2.num_nodes() {
        if slot_of[v] == usize::MAX {
            slot_of[v] = next;
            next += 1;
            ops.push(EditOp::InsertNode { ty: g2.node_types[v], slot: None });
        }
    }
    let mut preimage = vec![None; g2.num_nodes()];
    for (u, m) in map.iter().enumerate() {
        if let Some(v) = *m {
            preimage[v] = Some(u);
        }
    }
    for e in &g2.edges {
        let present = match (preimage[e.src], preimage[e.dst]) {
            (Some(u), Some(w)) => a1[u][w] & (1 << e.ty) != 0,
            _ => false,
        };
        if !present {
            ops.push(EditOp::InsertEdge { src: slot_of[e.src], dst: slot_of[e.dst], ty: e.ty });
        }
    }
    EditPath { ops }
}

/// Applies `path` to `g`, checking that every op is legal: edges must exist
/// to be deleted, and a deleted node may keep incident edges only when its
/// slot is re-occupied.
pub fn apply_edit_path(g: &HetGraph, path: &EditPath) -> Result<HetGraph, HgedError> {
    let bad = |m: String| HgedError::InvalidPath(m);
    let mut slots: Vec<Option<usize>> = g.node_types.iter().map(|&t| Some(t)).collect();
    let mut edges: BTreeSet<Edge> = g.edges.iter().copied().collect();
    for op in &path.ops {
        match *op {
            EditOp::InsertNode { ty, slot: None } => slots.push(Some(ty)),
            EditOp::InsertNode { ty, slot: Some(s) } => match slots.get_mut(s) {
                Some(cell @ None) => *cell = Some(ty),
                _ => return Err(bad(format!("slot {s} is not vacant"))),
            },
            EditOp::DeleteNode { node } => match slots.get_mut(node) {
                Some(cell @ Some(_)) => *cell = None,
                _ => return Err(bad(format!("node {node} does not exist"))),
            },
            EditOp::InsertEdge { src, dst, ty } => {
                if src == dst || src >= slots.len() || dst >= slots.len() {
                    return Err(bad(format!("edge ({src}, {dst}) has invalid endpoints")));
                }
                if !edges.insert(Edge::new(src, dst, ty)) {
                    return Err(bad(format!("edge ({src}, {dst}, {ty}) already present")));
                }
            }
            EditOp::DeleteEdge { src, dst, ty } => {
                if !edges.remove(&Edge::new(src, dst, ty)) {
                    return Err(bad(format!("edge ({src}, {dst}, {ty}) absent")));
                }
            }
        }
    }
    if let Some(e) = edges.iter().find(|e| slots[e.src].is_none() || slots[e.dst].is_none()) {
        return Err(bad(format!("edge ({}, {}) dangles from a deleted node", e.src, e.dst)));
    }
    let mut index = vec![usize::MAX; slots.len()];
    let mut types = Vec::new();
    for (s, t) in slots.iter().enumerate() {
        if let Some(t) = t {
            index[s] = types.len();
            types.push(*t);
        }
    }
    let edges = edges.iter().map(|e| Edge::new(index[e.src], index[e.dst], e.ty)).collect();
    Ok(HetGraph::new(g.id.clone(), types, edges))
}
