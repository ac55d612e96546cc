use std::collections::BTreeMap;

use super::{ParamStore, TensorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-2 }
    }
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub cfg: AdamWConfig,
    step: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig) -> Self {
        Self { cfg, step: 0, m: BTreeMap::new(), v: BTreeMap::new() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// `p ← p − lr·wd·p`, then the bias-corrected Adam update. Every
    /// parameter must carry a gradient; all gradients are cleared.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<(), TensorError> {
        if let Some((name, _)) = params.iter().find(|(_, t)| t.grad().is_none()) {
            return Err(TensorError::MissingGrad(name.clone()));
        }
        self.step += 1;
        let AdamWConfig { lr, beta1, beta2, eps, weight_decay } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (name, t) in params.iter_mut() {
            let g = t.grad().expect("checked above").to_vec();
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; g.len()]);
            for (i, p) in t.data_mut().iter_mut().enumerate() {
                *p -= lr * weight_decay * *p;
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                *p -= lr * mhat / (vhat.sqrt() + eps);
            }
            t.clear_grad();
        }
        Ok(())
    }
}
