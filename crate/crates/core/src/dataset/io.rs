use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusStats, DatasetBundle, DatasetError, GraphPair, PairSets, Split};
use crate::hetgraph::json::{corpus_text, parse_corpus};
use crate::hetgraph::{HetGraph, TypeVocab};
use crate::hged::normalize_hged;

pub const PAIRS_HEADER: [&str; 4] = ["id_a", "id_b", "hged", "norm_score"];

const CORPUS: &str = "corpus.jsonl";
const VOCAB: &str = "vocab.json";
const SPLIT: &str = "split.json";
const STATS: &str = "stats.json";
const PAIR_FILES: [&str; 3] = ["pairs_train.csv", "pairs_val.csv", "pairs_test.csv"];

#[derive(Serialize, Deserialize)]
struct StatsFile {
    #[serde(flatten)]
    stats: CorpusStats,
    corpus_sha256: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: impl ToString) -> DatasetError {
    DatasetError::Corrupt { path: path.to_path_buf(), reason: reason.to_string() }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_required(path: PathBuf) -> Result<(PathBuf, String), DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok((path, text))
}

pub fn write_pairs_csv(path: &Path, pairs: &[GraphPair]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| corrupt(path, e))?;
    w.write_record(PAIRS_HEADER).map_err(|e| corrupt(path, e))?;
    for p in pairs {
        w.write_record([
            p.id_a.as_str(),
            p.id_b.as_str(),
            &p.hged.to_string(),
            &format!("{:.6}", p.norm_score),
        ])
        .map_err(|e| corrupt(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a pairs CSV. Scores are recomputed from the integer distance and
/// the node counts in `index`; the printed score must agree to 6 decimals.
pub fn read_pairs_csv(
    path: &Path,
    index: &HashMap<&str, &HetGraph>,
) -> Result<Vec<GraphPair>, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| corrupt(path, e))?;
    let header = r.headers().map_err(|e| corrupt(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != PAIRS_HEADER {
        return Err(corrupt(path, format!("unexpected header {:?}", header)));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| corrupt(path, e))?;
        let row = line + 2;
        let field = |i: usize| rec.get(i).ok_or_else(|| corrupt(path, format!("row {row}: missing column")));
        let id_a = field(0)?.to_string();
        let id_b = field(1)?.to_string();
        let hged: u32 = field(2)?.parse().map_err(|e| corrupt(path, format!("row {row}: {e}")))?;
        let printed: f64 = field(3)?.parse().map_err(|e| corrupt(path, format!("row {row}: {e}")))?;
        let (ga, gb) = match (index.get(id_a.as_str()), index.get(id_b.as_str())) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(corrupt(path, format!("row {row}: unknown graph id"))),
        };
        let norm_score = normalize_hged(hged as f64, ga.num_nodes(), gb.num_nodes());
        if (norm_score - printed).abs() > 5.0e-7 + 1e-12 {
            return Err(corrupt(path, format!("row {row}: score {printed} disagrees with hged {hged}")));
        }
        out.push(GraphPair { id_a, id_b, hged, norm_score });
    }
    Ok(out)
}

pub fn write_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let corpus = corpus_text(&bundle.corpus, &bundle.vocab);
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))
    };
    write(CORPUS, &corpus)?;
    write(VOCAB, &bundle.vocab.to_json())?;
    write(SPLIT, &serde_json::to_string_pretty(&bundle.split).expect("split serializes"))?;
    let stats = StatsFile { stats: bundle.stats.clone(), corpus_sha256: sha256_hex(corpus.as_bytes()) };
    write(STATS, &serde_json::to_string_pretty(&stats).expect("stats serialize"))?;
    let sets = [&bundle.pairs.train, &bundle.pairs.val, &bundle.pairs.test];
    for (name, pairs) in PAIR_FILES.iter().zip(sets) {
        write_pairs_csv(&dir.join(name), pairs)?;
    }
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<DatasetBundle, DatasetError> {
    let (vpath, vtext) = read_required(dir.join(VOCAB))?;
    let vocab = TypeVocab::from_json(&vtext).map_err(|e| corrupt(&vpath, e))?;
    let (cpath, ctext) = read_required(dir.join(CORPUS))?;
    let (spath, stext) = read_required(dir.join(STATS))?;
    let stats: StatsFile = serde_json::from_str(&stext).map_err(|e| corrupt(&spath, e))?;
    if stats.corpus_sha256 != sha256_hex(ctext.as_bytes()) {
        return Err(corrupt(&cpath, "checksum does not match stats.json"));
    }
    let corpus = parse_corpus(&ctext, &vocab).map_err(|e| corrupt(&cpath, e))?;
    let (sppath, sptext) = read_required(dir.join(SPLIT))?;
    let split: Split = serde_json::from_str(&sptext).map_err(|e| corrupt(&sppath, e))?;
    let index: HashMap<&str, &HetGraph> = corpus.iter().map(|g| (g.id.as_str(), g)).collect();
    if let Some(id) = split.train.iter().chain(&split.val).chain(&split.test).find(|id| !index.contains_key(id.as_str())) {
        return Err(corrupt(&sppath, format!("unknown graph id {id:?}")));
    }
    let mut sets = Vec::new();
    for name in PAIR_FILES {
        sets.push(read_pairs_csv(&dir.join(name), &index)?);
    }
    let test = sets.pop().unwrap_or_default();
    let val = sets.pop().unwrap_or_default();
    let train = sets.pop().unwrap_or_default();
    drop(index);
    Ok(DatasetBundle { corpus, vocab, split, pairs: PairSets { train, val, test }, stats: stats.stats })
}
