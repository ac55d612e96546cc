use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, GraphError, HetGraph, TypeVocab};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    id: String,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: i64,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    src: i64,
    dst: i64,
    #[serde(rename = "type")]
    ty: String,
}

enum Resolve<'a> {
    Fixed(&'a TypeVocab),
    Infer(&'a mut TypeVocab),
}

impl Resolve<'_> {
    fn node(&mut self, graph: &str, label: &str) -> Result<usize, GraphError> {
        match self {
            Resolve::Fixed(v) => v.node_index(label).ok_or_else(|| GraphError::UnknownNodeType {
                graph: graph.into(),
                label: label.into(),
            }),
            Resolve::Infer(v) => Ok(v.node_index(label).unwrap_or_else(|| {
                v.node_types.push(label.into());
                v.node_types.len() - 1
            })),
        }
    }

    fn edge(&mut self, graph: &str, label: &str) -> Result<usize, GraphError> {
        match self {
            Resolve::Fixed(v) => v.edge_index(label).ok_or_else(|| GraphError::UnknownEdgeType {
                graph: graph.into(),
                label: label.into(),
            }),
            Resolve::Infer(v) => Ok(v.edge_index(label).unwrap_or_else(|| {
                v.edge_types.push(label.into());
                v.edge_types.len() - 1
            })),
        }
    }

    fn edge_label(&self, ty: usize) -> String {
        match self {
            Resolve::Fixed(v) => v.edge_types[ty].clone(),
            Resolve::Infer(v) => v.edge_types[ty].clone(),
        }
    }
}

/// Parses one graph document, resolving labels against a fixed vocabulary.
pub fn parse_graph(text: &str, vocab: &TypeVocab) -> Result<HetGraph, GraphError> {
    parse_with(text, Resolve::Fixed(vocab))
}

/// Parses one graph document, appending unseen labels to `vocab`.
pub fn parse_graph_inferring(text: &str, vocab: &mut TypeVocab) -> Result<HetGraph, GraphError> {
    parse_with(text, Resolve::Infer(vocab))
}

fn parse_with(text: &str, mut resolve: Resolve<'_>) -> Result<HetGraph, GraphError> {
    let doc: GraphDoc =
        serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
    let gid = doc.id.clone();
    let n = doc.nodes.len();
    let mut types = vec![usize::MAX; n];
    for node in &doc.nodes {
        if node.id < 0 || node.id as usize >= n {
            return Err(GraphError::NonContiguousIds { graph: gid, id: node.id });
        }
        let slot = &mut types[node.id as usize];
        if *slot != usize::MAX {
            return Err(GraphError::DuplicateNode { graph: gid, id: node.id });
        }
        *slot = resolve.node(&gid, &node.ty)?;
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut seen = HashSet::new();
    for e in &doc.edges {
        if e.src < 0 || e.dst < 0 || e.src as usize >= n || e.dst as usize >= n {
            return Err(GraphError::DanglingEdge { graph: gid, src: e.src, dst: e.dst });
        }
        if e.src == e.dst {
            return Err(GraphError::SelfLoop { graph: gid, node: e.src as usize });
        }
        let ty = resolve.edge(&gid, &e.ty)?;
        let edge = Edge::new(e.src as usize, e.dst as usize, ty);
        if !seen.insert(edge) {
            return Err(GraphError::DuplicateEdge {
                graph: gid,
                src: edge.src,
                dst: edge.dst,
                label: resolve.edge_label(ty),
            });
        }
        edges.push(edge);
    }
    Ok(HetGraph::new(doc.id, types, edges))
}

/// Single-line JSON document for `g`.
pub fn serialize_graph(g: &HetGraph, vocab: &TypeVocab) -> String {
    let doc = GraphDoc {
        id: g.id.clone(),
        nodes: g
            .node_types
            .iter()
            .enumerate()
            .map(|(i, &t)| NodeDoc { id: i as i64, ty: vocab.node_types[t].clone() })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| EdgeDoc {
                src: e.src as i64,
                dst: e.dst as i64,
                ty: vocab.edge_types[e.ty].clone(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("graph serializes")
}

/// Reads a JSON Lines corpus. Blank lines are skipped.
pub fn read_corpus(path: &Path, vocab: &TypeVocab) -> Result<Vec<HetGraph>, GraphError> {
    let text = fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    parse_corpus(&text, vocab)
}

pub(crate) fn parse_corpus(text: &str, vocab: &TypeVocab) -> Result<Vec<HetGraph>, GraphError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_graph(l, vocab)
                .map_err(|e| GraphError::CorpusLine { line: i + 1, source: Box::new(e) })
        })
        .collect()
}

pub(crate) fn corpus_text(graphs: &[HetGraph], vocab: &TypeVocab) -> String {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&serialize_graph(g, vocab));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: &Path, graphs: &[HetGraph], vocab: &TypeVocab) -> Result<(), GraphError> {
    let mut f = fs::File::create(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(corpus_text(graphs, vocab).as_bytes())
        .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vocab() -> TypeVocab {
        TypeVocab::new(vec!["A".into(), "B".into()], vec!["r".into(), "s".into()]).unwrap()
    }

    #[test]
    fn minimal_graph() {
        let g = parse_graph(r#"{"id":"g0","nodes":[{"id":0,"type":"A"}],"edges":[]}"#, &vocab()).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn single_edge_normalized() {
        let text = r#"{"id":"g","nodes":[{"id":1,"type":"B"},{"id":0,"type":"A"}],
            "edges":[{"src":1,"dst":0,"type":"s"}]}"#;
        let g = parse_graph(text, &vocab()).unwrap();
        assert_eq!(g.node_types, vec![0, 1]);
        assert_eq!(g.edges, vec![Edge { src: 0, dst: 1, ty: 1 }]);
    }

    #[test]
    fn errors_name_offender() {
        let v = vocab();
        let self_loop = r#"{"id":"g","nodes":[{"id":0,"type":"A"}],"edges":[{"src":0,"dst":0,"type":"r"}]}"#;
        let err = parse_graph(self_loop, &v).unwrap_err();
        assert!(err.to_string().contains("self-loop"));
        assert_eq!(err, GraphError::SelfLoop { graph: "g".into(), node: 0 });

        let unknown = r#"{"id":"g","nodes":[{"id":0,"type":"Z"}],"edges":[]}"#;
        assert_eq!(
            parse_graph(unknown, &v).unwrap_err(),
            GraphError::UnknownNodeType { graph: "g".into(), label: "Z".into() }
        );
        let gap = r#"{"id":"g","nodes":[{"id":0,"type":"A"},{"id":2,"type":"A"}],"edges":[]}"#;
        assert_eq!(
            parse_graph(gap, &v).unwrap_err(),
            GraphError::NonContiguousIds { graph: "g".into(), id: 2 }
        );
        let dup = r#"{"id":"g","nodes":[{"id":0,"type":"A"},{"id":1,"type":"A"}],
            "edges":[{"src":0,"dst":1,"type":"r"},{"src":1,"dst":0,"type":"r"}]}"#;
        assert!(matches!(parse_graph(dup, &v).unwrap_err(), GraphError::DuplicateEdge { .. }));
        let bad_edge_type = r#"{"id":"g","nodes":[{"id":0,"type":"A"},{"id":1,"type":"A"}],
            "edges":[{"src":0,"dst":1,"type":"q"}]}"#;
        assert!(matches!(parse_graph(bad_edge_type, &v).unwrap_err(), GraphError::UnknownEdgeType { .. }));
        assert!(matches!(parse_graph("{not json", &v).unwrap_err(), GraphError::Malformed(_)));
    }

    #[test]
    fn inference_extends_vocab() {
        let mut v = TypeVocab::default();
        let text = r#"{"id":"g","nodes":[{"id":0,"type":"P"},{"id":1,"type":"A"}],"edges":[{"src":0,"dst":1,"type":"writes"}]}"#;
        let g = parse_graph_inferring(text, &mut v).unwrap();
        assert_eq!(v.node_types, vec!["P".to_string(), "A".to_string()]);
        assert_eq!(v.edge_types, vec!["writes".to_string()]);
        assert_eq!(g.node_types, vec![0, 1]);
    }

    prop_compose! {
        fn arb_graph()(n in 1usize..8)(
            types in proptest::collection::vec(0usize..2, n),
            pairs in proptest::collection::btree_set((0usize..n, 0usize..n, 0usize..2), 0..12),
        ) -> HetGraph {
            let edges = pairs.into_iter().filter(|(a, b, _)| a != b)
                .map(|(a, b, t)| Edge::new(a, b, t))
                .collect::<std::collections::BTreeSet<_>>().into_iter().collect();
            HetGraph::new("p", types, edges)
        }
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(g in arb_graph()) {
            let v = vocab();
            let text = serialize_graph(&g, &v);
            prop_assert_eq!(parse_graph(&text, &v).unwrap(), g);
        }
    }
}
