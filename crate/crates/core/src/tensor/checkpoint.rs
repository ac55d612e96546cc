use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::{ParamStore, Tensor, TensorError};

pub const CHECKPOINT_FORMAT: u64 = 1;

/// Parameters plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParamStore,
    pub config: Value,
}

fn err(msg: impl ToString) -> TensorError {
    TensorError::Checkpoint(msg.to_string())
}

impl Checkpoint {
    /// JSON text with every parameter value written to 17 significant digits.
    pub fn to_json(&self) -> Result<String, TensorError> {
        let mut out = format!("{{\"format\":{CHECKPOINT_FORMAT},\"params\":{{");
        for (i, (name, t)) in self.params.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('\n');
            let key = serde_json::to_string(name).map_err(err)?;
            let shape = serde_json::to_string(t.shape()).map_err(err)?;
            write!(out, "{key}:{{\"shape\":{shape},\"data\":[").expect("string write");
            for (j, x) in t.data().iter().enumerate() {
                if !x.is_finite() {
                    return Err(err(format!("non-finite value in {name}")));
                }
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{x:.16e}").expect("string write");
            }
            out.push_str("]}");
        }
        let config = serde_json::to_string(&self.config).map_err(err)?;
        write!(out, "\n}},\"config\":{config}}}\n").expect("string write");
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self, TensorError> {
        let doc: Value = serde_json::from_str(text).map_err(err)?;
        let obj = doc.as_object().ok_or_else(|| err("top level is not an object"))?;
        match obj.get("format").and_then(Value::as_u64) {
            Some(CHECKPOINT_FORMAT) => {}
            other => return Err(err(format!("unsupported format {other:?}"))),
        }
        let raw = obj.get("params").and_then(Value::as_object).ok_or_else(|| err("missing params"))?;
        let mut params = ParamStore::new();
        for (name, entry) in raw {
            let shape: Vec<usize> = entry
                .get("shape")
                .and_then(Value::as_array)
                .ok_or_else(|| err(format!("{name}: missing shape")))?
                .iter()
                .map(|x| x.as_u64().map(|v| v as usize))
                .collect::<Option<_>>()
                .ok_or_else(|| err(format!("{name}: bad shape")))?;
            let data: Vec<f64> = entry
                .get("data")
                .and_then(Value::as_array)
                .ok_or_else(|| err(format!("{name}: missing data")))?
                .iter()
                .map(Value::as_f64)
                .collect::<Option<_>>()
                .ok_or_else(|| err(format!("{name}: bad data")))?;
            params.insert(name.clone(), Tensor::new(shape, data).map_err(|e| err(format!("{name}: {e}")))?);
        }
        let config = obj.get("config").cloned().unwrap_or(Value::Null);
        Ok(Self { params, config })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), TensorError> {
    fs::write(path, ckpt.to_json()?).map_err(|e| err(format!("{}: {e}", path.display())))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, TensorError> {
    let text = fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    Checkpoint::from_json(&text)
}
