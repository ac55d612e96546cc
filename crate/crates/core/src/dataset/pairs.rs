use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::hetgraph::HetGraph;
use crate::hged::{hged_astar, normalize_hged};

/// Training splits up to this size use every unordered pair.
pub const FULL_PAIRS_MAX_TRAIN: usize = 600;
/// Pair budget applied above [`FULL_PAIRS_MAX_TRAIN`].
pub const DEFAULT_TRAIN_PAIR_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPair {
    pub id_a: String,
    pub id_b: String,
    pub hged: u32,
    pub norm_score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairSets {
    pub train: Vec<GraphPair>,
    pub val: Vec<GraphPair>,
    pub test: Vec<GraphPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairCap {
    /// Full cross-product up to 600 training graphs, else 200,000 pairs.
    #[default]
    Policy,
    Unlimited,
    AtMost(usize),
}

impl PairCap {
    fn limit(self, train_graphs: usize) -> Option<usize> {
        match self {
            PairCap::Policy if train_graphs <= FULL_PAIRS_MAX_TRAIN => None,
            PairCap::Policy => Some(DEFAULT_TRAIN_PAIR_CAP),
            PairCap::Unlimited => None,
            PairCap::AtMost(n) => Some(n),
        }
    }
}

/// Pairs excluded because the solver hit its expansion limit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub excluded: usize,
}

/// Seeded shuffle, then contiguous 6:2:2 split with remainders in train.
pub fn split_corpus(ids: &[String], seed: u64) -> Result<Split, DatasetError> {
    if ids.len() < 5 {
        return Err(DatasetError::TooSmall(ids.len()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let val = n * 2 / 10;
    let test = n * 2 / 10;
    let train = n - val - test;
    let test_ids = shuffled.split_off(train + val);
    let val_ids = shuffled.split_off(train);
    Ok(Split { train: shuffled, val: val_ids, test: test_ids })
}

/// The `k`-th unordered pair `(i, j)`, `i < j`, in row-major order over `n`.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

/// Labels `(a, b)` id pairs with exact HGED; pairs whose search exceeds the
/// expansion limit are dropped and counted.
pub fn label_pairs(
    raw: &[(String, String)],
    index: &HashMap<&str, &HetGraph>,
    expansion_limit: Option<usize>,
) -> Result<(Vec<GraphPair>, usize), DatasetError> {
    for (a, b) in raw {
        for id in [a, b] {
            if !index.contains_key(id.as_str()) {
                return Err(DatasetError::UnknownGraph(id.clone()));
            }
        }
    }
    let labeled: Vec<Option<GraphPair>> = raw
        .par_iter()
        .map(|(a, b)| {
            let ga = index[a.as_str()];
            let gb = index[b.as_str()];
            hged_astar(ga, gb, expansion_limit).ok().map(|d| GraphPair {
                id_a: a.clone(),
                id_b: b.clone(),
                hged: d,
                norm_score: normalize_hged(d as f64, ga.num_nodes(), gb.num_nodes()),
            })
        })
        .collect();
    let excluded = labeled.iter().filter(|p| p.is_none()).count();
    Ok((labeled.into_iter().flatten().collect(), excluded))
}

/// Train pairs over train x train (unordered), val over val x train, test
/// over test x train.
pub fn build_pairs(
    split: &Split,
    corpus: &[HetGraph],
    cap: PairCap,
    seed: u64,
    expansion_limit: Option<usize>,
) -> Result<(PairSets, BuildReport), DatasetError> {
    let index: HashMap<&str, &HetGraph> = corpus.iter().map(|g| (g.id.as_str(), g)).collect();
    let n = split.train.len();
    let total = n * n.saturating_sub(1) / 2;
    let chosen: Vec<usize> = match cap.limit(n) {
        Some(limit) if limit < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = rand::seq::index::sample(&mut rng, total, limit).into_vec();
            picks.sort_unstable();
            picks
        }
        _ => (0..total).collect(),
    };
    let train_raw: Vec<(String, String)> = chosen
        .into_iter()
        .map(|k| {
            let (i, j) = unrank_pair(k, n);
            (split.train[i].clone(), split.train[j].clone())
        })
        .collect();
    let cross = |queries: &[String]| -> Vec<(String, String)> {
        queries
            .iter()
            .flat_map(|q| split.train.iter().map(move |t| (q.clone(), t.clone())))
            .collect()
    };
    let (train, e1) = label_pairs(&train_raw, &index, expansion_limit)?;
    let (val, e2) = label_pairs(&cross(&split.val), &index, expansion_limit)?;
    let (test, e3) = label_pairs(&cross(&split.test), &index, expansion_limit)?;
    Ok((PairSets { train, val, test }, BuildReport { excluded: e1 + e2 + e3 }))
}
