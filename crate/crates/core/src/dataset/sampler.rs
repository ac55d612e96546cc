use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::hetgraph::HetGraph;

pub const MAX_SAMPLE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerSpec {
    pub max_nodes: usize,
    pub min_node_types: usize,
    pub seed: u64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self { max_nodes: 16, min_node_types: 2, seed: 0 }
    }
}

/// BFS subgraph sampler over a fixed source graph.
pub struct BfsSampler<'a> {
    source: &'a HetGraph,
    adj: Vec<Vec<usize>>,
}

impl<'a> BfsSampler<'a> {
    pub fn new(source: &'a HetGraph) -> Self {
        let adj = source
            .neighbors()
            .into_iter()
            .map(|mut nb| {
                let mut ids: Vec<usize> = nb.drain(..).map(|(m, _)| m).collect();
                ids.sort_unstable();
                ids.dedup();
                ids
            })
            .collect();
        Self { source, adj }
    }

    /// Node set grown layer by layer from a uniform seed node. Each layer is
    /// admitted node by node in random order until `max_nodes` is reached.
    fn grow(&self, max_nodes: usize, rng: &mut impl Rng) -> Vec<usize> {
        let n = self.source.num_nodes();
        let start = rng.gen_range(0..n);
        let mut chosen = vec![start];
        let mut in_set = vec![false; n];
        in_set[start] = true;
        let mut frontier = vec![start];
        while chosen.len() < max_nodes && !frontier.is_empty() {
            let mut layer = Vec::new();
            for &u in &frontier {
                for &v in &self.adj[u] {
                    if !in_set[v] {
                        in_set[v] = true;
                        layer.push(v);
                    }
                }
            }
            layer.shuffle(rng);
            layer.truncate(max_nodes - chosen.len());
            chosen.extend_from_slice(&layer);
            frontier = layer;
        }
        chosen
    }

    pub fn sample(
        &self,
        spec: &SamplerSpec,
        id: impl Into<String>,
        rng: &mut impl Rng,
    ) -> Result<HetGraph, DatasetError> {
        if self.source.num_nodes() == 0 {
            return Err(DatasetError::InvalidSpec("source graph is empty".into()));
        }
        if spec.max_nodes == 0 {
            return Err(DatasetError::InvalidSpec("max_nodes must be at least 1".into()));
        }
        let id = id.into();
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let nodes = self.grow(spec.max_nodes, rng);
            let g = self.source.induced(id.clone(), &nodes);
            if g.distinct_node_types() >= spec.min_node_types {
                return Ok(g);
            }
        }
        Err(DatasetError::DiversityUnattainable {
            min_node_types: spec.min_node_types,
            attempts: MAX_SAMPLE_ATTEMPTS,
        })
    }
}

/// One BFS sample from `source`.
pub fn bfs_sample(
    source: &HetGraph,
    spec: &SamplerSpec,
    rng: &mut impl Rng,
) -> Result<HetGraph, DatasetError> {
    BfsSampler::new(source).sample(spec, "sample", rng)
}

/// Summary statistics of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub graphs: usize,
    pub avg_nodes: f64,
    pub avg_edges: f64,
    pub node_types: usize,
    pub edge_types: usize,
    pub node_type_counts: Vec<usize>,
    pub edge_type_counts: Vec<usize>,
    pub max_nodes: usize,
}

impl CorpusStats {
    pub fn of(graphs: &[HetGraph], node_types: usize, edge_types: usize) -> Self {
        let count = graphs.len().max(1) as f64;
        let mut ntc = vec![0; node_types];
        let mut etc = vec![0; edge_types];
        for g in graphs {
            for &t in &g.node_types {
                ntc[t] += 1;
            }
            for e in &g.edges {
                etc[e.ty] += 1;
            }
        }
        Self {
            graphs: graphs.len(),
            avg_nodes: graphs.iter().map(|g| g.num_nodes()).sum::<usize>() as f64 / count,
            avg_edges: graphs.iter().map(|g| g.num_edges()).sum::<usize>() as f64 / count,
            node_types,
            edge_types,
            node_type_counts: ntc,
            edge_type_counts: etc,
            max_nodes: graphs.iter().map(|g| g.num_nodes()).max().unwrap_or(0),
        }
    }
}

/// `count` samples with ids `g0, g1, ...`, deterministic in `spec.seed`.
pub fn build_corpus(
    source: &HetGraph,
    count: usize,
    spec: &SamplerSpec,
) -> Result<Vec<HetGraph>, DatasetError> {
    if count == 0 {
        return Err(DatasetError::InvalidSpec("corpus count must be at least 1".into()));
    }
    let sampler = BfsSampler::new(source);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..count).map(|i| sampler.sample(spec, format!("g{i}"), &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_source_graph;
    use crate::hetgraph::{validate_graph, TypeVocab};

    #[test]
    fn one_node_source() {
        let src = HetGraph::new("s", vec![2], vec![]);
        let spec = SamplerSpec { max_nodes: 16, min_node_types: 1, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = bfs_sample(&src, &spec, &mut rng).unwrap();
        assert_eq!(g.node_types, vec![2]);
    }

    #[test]
    fn samples_bounded_connected_and_diverse() {
        let src = synth_source_graph(3, 3, 2000, 2.5, 1).unwrap();
        let spec = SamplerSpec { max_nodes: 10, min_node_types: 2, seed: 4 };
        let sampler = BfsSampler::new(&src);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..300 {
            let g = sampler.sample(&spec, format!("g{i}"), &mut rng).unwrap();
            assert!(g.num_nodes() <= 10);
            assert!(g.is_connected());
            assert!(g.distinct_node_types() >= 2);
        }
    }

    #[test]
    fn diversity_failure() {
        let src = HetGraph::new("s", vec![0, 0, 0], vec![]);
        let spec = SamplerSpec { max_nodes: 3, min_node_types: 2, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            bfs_sample(&src, &spec, &mut rng),
            Err(DatasetError::DiversityUnattainable { attempts: 100, .. })
        ));
    }

    #[test]
    fn corpus_valid_and_deterministic() {
        let vocab = TypeVocab::numbered(3, 3);
        let src = synth_source_graph(3, 3, 3000, 2.0, 7).unwrap();
        let spec = SamplerSpec { max_nodes: 16, min_node_types: 2, seed: 11 };
        let a = build_corpus(&src, 1000, &spec).unwrap();
        let b = build_corpus(&src, 1000, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| validate_graph(g, &vocab).is_ok()));
        let stats = CorpusStats::of(&a, 3, 3);
        assert!(stats.avg_nodes <= 16.0);
        assert_eq!(stats.graphs, 1000);
        assert_eq!(a[7].id, "g7");
    }
}
