use super::{affine, ModelError};
use crate::tensor::{ParamStore, Tape, Var};

/// Fully connected head over `[h′, s′]`: affine layers `head.0, head.1, …`
/// with ReLU between and a logistic output.
pub fn predict<'a>(t: &mut Tape<'a>, p: &'a ParamStore, h: Var, s: Var) -> Result<Var, ModelError> {
    let mut x = t.concat(&[h, s])?;
    let layers = (0..).take_while(|i| p.contains(&format!("head.{i}.w"))).count();
    if layers == 0 {
        return Err(ModelError::InvalidConfig("no head layers".into()));
    }
    for i in 0..layers {
        x = affine(t, p, &format!("head.{i}"), x)?;
        if i + 1 < layers {
            x = t.relu(x);
        }
    }
    Ok(t.sigmoid(x))
}

/// Mean squared error over paired single-element predictions and targets.
pub fn mse_loss(t: &mut Tape, preds: &[Var], targets: &[Var]) -> Result<Var, ModelError> {
    if preds.is_empty() || preds.len() != targets.len() {
        return Err(ModelError::InvalidConfig(format!(
            "mse needs equal non-empty batches, got {} predictions and {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut total: Option<Var> = None;
    for (&p, &y) in preds.iter().zip(targets) {
        let p = t.flatten(p);
        let y = t.flatten(y);
        let d = t.sub(p, y)?;
        let sq = t.mul(d, d)?;
        total = Some(match total {
            None => sq,
            Some(acc) => t.add(acc, sq)?,
        });
    }
    let sum = t.sum_all(total.expect("non-empty"));
    Ok(t.scale(sum, 1.0 / preds.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn consts(t: &mut Tape, xs: &[f64]) -> Vec<Var> {
        xs.iter().map(|&x| t.constant(&Tensor::new(vec![1, 1], vec![x]).unwrap())).collect()
    }

    #[test]
    fn mse_examples() {
        let mut t = Tape::new();
        let p = consts(&mut t, &[1.0, 0.0]);
        let y = consts(&mut t, &[0.0, 0.0]);
        let l = mse_loss(&mut t, &p, &y).unwrap();
        assert_eq!(t.value(l), &[0.5]);
        let same = mse_loss(&mut t, &p, &p).unwrap();
        assert_eq!(t.value(same), &[0.0]);
        let pr: Vec<Var> = p.iter().rev().copied().collect();
        let yr: Vec<Var> = y.iter().rev().copied().collect();
        let l2 = mse_loss(&mut t, &pr, &yr).unwrap();
        assert_eq!(t.value(l2), t.value(l));
        assert!(mse_loss(&mut t, &[], &[]).is_err());
    }
}
