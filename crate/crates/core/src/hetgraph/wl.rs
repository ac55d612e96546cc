//! Typed 1-WL color refinement.

use sha2::{Digest, Sha256};

use super::HetGraph;

/// Canonical hex digest of the multiset of refined node colors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColorSignature(pub String);

fn digest64(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&d[..8]);
    u64::from_le_bytes(head)
}

/// Node colors after `iterations` rounds of typed refinement.
///
/// Round zero colors a node by its type. Each round hashes the node's own
/// color together with the sorted multiset of `(edge type, neighbor color)`.
/// Colors depend only on structure, never on node indices, so they are
/// comparable across graphs.
pub fn typed_wl_colors(g: &HetGraph, iterations: usize) -> Vec<u64> {
    let adj = g.neighbors();
    let mut colors: Vec<u64> = g
        .node_types
        .iter()
        .map(|&t| {
            let mut buf = b"type".to_vec();
            buf.extend_from_slice(&(t as u64).to_le_bytes());
            digest64(&buf)
        })
        .collect();
    let mut buf = Vec::new();
    for _ in 0..iterations {
        let next = (0..g.num_nodes())
            .map(|n| {
                let mut nb: Vec<(u64, u64)> =
                    adj[n].iter().map(|&(m, ty)| (ty as u64, colors[m])).collect();
                nb.sort_unstable();
                buf.clear();
                buf.extend_from_slice(&colors[n].to_le_bytes());
                for (ty, c) in nb {
                    buf.extend_from_slice(&ty.to_le_bytes());
                    buf.extend_from_slice(&c.to_le_bytes());
                }
                digest64(&buf)
            })
            .collect();
        colors = next;
    }
    colors
}

pub fn typed_wl_hash(g: &HetGraph, iterations: usize) -> ColorSignature {
    let mut colors = typed_wl_colors(g, iterations.max(1));
    colors.sort_unstable();
    let mut hasher = Sha256::new();
    hasher.update((colors.len() as u64).to_le_bytes());
    for c in colors {
        hasher.update(c.to_le_bytes());
    }
    let hex: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    ColorSignature(hex)
}
