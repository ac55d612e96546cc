//! Paired-graph regression datasets.
//!
//! Source graphs are sampled into a corpus of small connected subgraphs,
//! the corpus is split 6:2:2 and pairs are labeled with exact HGED.

mod io;
mod pairs;
mod sampler;
mod synth;

pub use io::{read_dataset, read_pairs_csv, write_dataset, write_pairs_csv, PAIRS_HEADER};
pub use pairs::{
    build_pairs, label_pairs, split_corpus, BuildReport, GraphPair, PairCap, PairSets, Split,
    DEFAULT_TRAIN_PAIR_CAP, FULL_PAIRS_MAX_TRAIN,
};
pub use sampler::{bfs_sample, build_corpus, BfsSampler, CorpusStats, SamplerSpec, MAX_SAMPLE_ATTEMPTS};
pub use synth::{compatible_edge_types, synth_source_graph, type_weights};

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::hetgraph::{GraphError, HetGraph, TypeVocab};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),
    #[error("no sample with at least {min_node_types} node types after {attempts} attempts")]
    DiversityUnattainable { min_node_types: usize, attempts: usize },
    #[error("corpus of {0} graphs is too small to split (need at least 5)")]
    TooSmall(usize),
    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("corrupt dataset file {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error("unknown graph id {0:?}")]
    UnknownGraph(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Corpus, vocabulary, split and labeled pairs of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub corpus: Vec<HetGraph>,
    pub vocab: TypeVocab,
    pub split: Split,
    pub pairs: PairSets,
    pub stats: CorpusStats,
}

impl DatasetBundle {
    pub fn index(&self) -> HashMap<&str, &HetGraph> {
        self.corpus.iter().map(|g| (g.id.as_str(), g)).collect()
    }

    pub fn max_nodes(&self) -> usize {
        self.corpus.iter().map(|g| g.num_nodes()).max().unwrap_or(0)
    }
}

/// Splits `corpus` with `seed` and labels its pairs.
pub fn build_bundle(
    corpus: Vec<HetGraph>,
    vocab: TypeVocab,
    cap: PairCap,
    seed: u64,
    expansion_limit: Option<usize>,
) -> Result<(DatasetBundle, BuildReport), DatasetError> {
    let ids: Vec<String> = corpus.iter().map(|g| g.id.clone()).collect();
    let split = split_corpus(&ids, seed)?;
    let (pairs, report) = build_pairs(&split, &corpus, cap, seed, expansion_limit)?;
    let stats = CorpusStats::of(&corpus, vocab.num_node_types(), vocab.num_edge_types());
    Ok((DatasetBundle { corpus, vocab, split, pairs, stats }, report))
}
