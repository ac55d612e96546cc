use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{EncoderKind, MaskMode, ModelConfig, NormMode};

/// Training and model hyperparameters.
///
/// `train_pair_cap` and `val_pair_cap` bound how many pairs are visited per
/// epoch; `None` uses every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub patience: usize,
    pub val_start_epoch: usize,
    pub hgin_layers: usize,
    pub hidden_dim: usize,
    pub basis_count: usize,
    pub heads: usize,
    pub graph_match_dim: usize,
    pub node_match_dim: usize,
    pub fcl_dims: Vec<usize>,
    pub normalization_mode: NormMode,
    pub mask_mode: MaskMode,
    pub encoder: EncoderKind,
    pub max_nodes: usize,
    pub train_pair_cap: Option<usize>,
    pub val_pair_cap: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            batch_size: 128,
            max_epochs: 10_000,
            lr: 1e-3,
            weight_decay: 1e-2,
            patience: 100,
            val_start_epoch: 100,
            hgin_layers: 3,
            hidden_dim: 64,
            basis_count: 4,
            heads: 4,
            graph_match_dim: 128,
            node_match_dim: 128,
            fcl_dims: vec![128, 64, 32, 1],
            normalization_mode: NormMode::Degree,
            mask_mode: MaskMode::Multiplicative,
            encoder: EncoderKind::Hgin,
            max_nodes: 16,
            train_pair_cap: None,
            val_pair_cap: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "seed",
    "batch_size",
    "max_epochs",
    "lr",
    "weight_decay",
    "patience",
    "val_start_epoch",
    "hgin_layers",
    "hidden_dim",
    "basis_count",
    "heads",
    "graph_match_dim",
    "node_match_dim",
    "fcl_dims",
    "normalization_mode",
    "mask_mode",
    "encoder",
    "max_nodes",
    "train_pair_cap",
    "val_pair_cap",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, HarnessError> {
    v.parse().map_err(|_| HarnessError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_cap(key: &str, v: &str) -> Result<Option<usize>, HarnessError> {
    if v == "none" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_enum<T: for<'de> Deserialize<'de>>(key: &str, v: &str) -> Result<T, HarnessError> {
    serde_json::from_value(serde_json::Value::String(v.to_string()))
        .map_err(|_| HarnessError::Config(format!("{key}: unknown value {v:?}")))
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => unreachable!("unit enums serialize as strings"),
    }
}

fn cap_text(c: Option<usize>) -> String {
    c.map_or_else(|| "none".to_string(), |n| n.to_string())
}

impl TrainConfig {
    /// Small-machine preset: 500 epochs, patience 50, batch 32, graphs of at
    /// most 10 nodes, 256 training and 256 validation pairs per epoch.
    pub fn desk(seed: u64) -> Self {
        Self {
            seed,
            batch_size: 32,
            max_epochs: 500,
            patience: 50,
            val_start_epoch: 50,
            max_nodes: 10,
            train_pair_cap: Some(256),
            val_pair_cap: Some(256),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let counts = [
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("val_start_epoch", self.val_start_epoch),
            ("max_nodes", self.max_nodes),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(HarnessError::Config(format!("{k} must be positive")));
        }
        if self.train_pair_cap == Some(0) || self.val_pair_cap == Some(0) {
            return Err(HarnessError::Config("pair caps must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HarnessError::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(HarnessError::Config(format!("weight_decay must be non-negative, got {}", self.weight_decay)));
        }
        Ok(())
    }

    pub fn model_config(&self, node_types: usize, edge_types: usize) -> Result<ModelConfig, HarnessError> {
        let cfg = ModelConfig {
            node_types,
            edge_types,
            layers: self.hgin_layers,
            hidden_dim: self.hidden_dim,
            basis_count: self.basis_count,
            heads: self.heads,
            graph_match_dim: self.graph_match_dim,
            node_match_dim: self.node_match_dim,
            fcl_dims: self.fcl_dims.clone(),
            max_nodes: self.max_nodes,
            normalization: self.normalization_mode,
            mask_mode: self.mask_mode,
            encoder: self.encoder,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), HarnessError> {
        match key {
            "seed" => self.seed = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "max_epochs" => self.max_epochs = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "weight_decay" => self.weight_decay = parse_num(key, v)?,
            "patience" => self.patience = parse_num(key, v)?,
            "val_start_epoch" => self.val_start_epoch = parse_num(key, v)?,
            "hgin_layers" => self.hgin_layers = parse_num(key, v)?,
            "hidden_dim" => self.hidden_dim = parse_num(key, v)?,
            "basis_count" => self.basis_count = parse_num(key, v)?,
            "heads" => self.heads = parse_num(key, v)?,
            "graph_match_dim" => self.graph_match_dim = parse_num(key, v)?,
            "node_match_dim" => self.node_match_dim = parse_num(key, v)?,
            "fcl_dims" => {
                self.fcl_dims = v
                    .trim_matches(|c| c == '[' || c == ']')
                    .split(',')
                    .map(|x| parse_num(key, x.trim()))
                    .collect::<Result<_, _>>()?
            }
            "normalization_mode" => self.normalization_mode = parse_enum(key, v)?,
            "mask_mode" => self.mask_mode = parse_enum(key, v)?,
            "encoder" => self.encoder = parse_enum(key, v)?,
            "max_nodes" => self.max_nodes = parse_num(key, v)?,
            "train_pair_cap" => self.train_pair_cap = parse_cap(key, v)?,
            "val_pair_cap" => self.val_pair_cap = parse_cap(key, v)?,
            _ => return Err(HarnessError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines over `self`. Blank lines and lines starting
    /// with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), HarnessError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| HarnessError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let fcl: Vec<String> = self.fcl_dims.iter().map(|d| d.to_string()).collect();
        let values = [
            self.seed.to_string(),
            self.batch_size.to_string(),
            self.max_epochs.to_string(),
            self.lr.to_string(),
            self.weight_decay.to_string(),
            self.patience.to_string(),
            self.val_start_epoch.to_string(),
            self.hgin_layers.to_string(),
            self.hidden_dim.to_string(),
            self.basis_count.to_string(),
            self.heads.to_string(),
            self.graph_match_dim.to_string(),
            self.node_match_dim.to_string(),
            fcl.join(","),
            enum_name(&self.normalization_mode),
            enum_name(&self.mask_mode),
            enum_name(&self.encoder),
            self.max_nodes.to_string(),
            cap_text(self.train_pair_cap),
            cap_text(self.val_pair_cap),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
