use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const METRICS_HEADER: [&str; 7] = ["mse", "spearman_rho", "kendall_tau", "p_at_10", "p_at_20", "num_pairs", "seconds"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mse: f64,
    pub spearman_rho: f64,
    pub kendall_tau: f64,
    pub p_at_10: f64,
    pub p_at_20: f64,
    pub num_pairs: usize,
    pub seconds: f64,
}

fn check_inputs(xs: &[f64], ys: &[f64]) -> Result<(), HarnessError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(HarnessError::Undefined(format!(
            "need two equal-length vectors of at least 2 values, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(HarnessError::Undefined("NaN input".into()));
    }
    Ok(())
}

/// Twice the average rank (1-based) of every value; ties share the mean.
fn doubled_ranks(xs: &[f64]) -> Vec<i64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && xs[idx[j]] == xs[idx[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j, mean (i + 1 + j) / 2
        for &k in &idx[i..j] {
            ranks[k] = (i + 1 + j) as i64;
        }
        i = j;
    }
    ranks
}

/// Spearman's ρ: Pearson correlation of average ranks.
///
/// Sums are taken over doubled ranks in integer arithmetic, so the only
/// rounding happens in the final square root and division.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, HarnessError> {
    check_inputs(xs, ys)?;
    let (rx, ry) = (doubled_ranks(xs), doubled_ranks(ys));
    let n = xs.len() as i128;
    let (sx, sy): (i128, i128) = (rx.iter().map(|&r| r as i128).sum(), ry.iter().map(|&r| r as i128).sum());
    let mut sxy = 0i128;
    let mut sxx = 0i128;
    let mut syy = 0i128;
    for (&a, &b) in rx.iter().zip(&ry) {
        let (a, b) = (a as i128, b as i128);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx == 0 || vy == 0 {
        return Err(HarnessError::Undefined("spearman of a constant vector".into()));
    }
    let den = if vx == vy { vx as f64 } else { (vx as f64 * vy as f64).sqrt() };
    Ok(cov as f64 / den)
}

/// Merge sort counting inversions.
fn count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut v[..mid], buf) + count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Σ t(t−1)/2 over runs of equal values in `sorted`.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's τ-b in O(n log n).
pub fn kendall(xs: &[f64], ys: &[f64]) -> Result<f64, HarnessError> {
    check_inputs(xs, ys)?;
    let n = xs.len() as u64;
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(ys[a].total_cmp(&ys[b])));
    let pairs: Vec<(f64, f64)> = idx.iter().map(|&i| (xs[i], ys[i])).collect();
    let n0 = n * (n - 1) / 2;
    let xs_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs_sorted);
    let n3 = tied_pairs(&pairs);
    let mut yv: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(yv.len());
    let swaps = count_swaps(&mut yv, &mut buf);
    let n2 = tied_pairs(&yv);
    if n1 == n0 || n2 == n0 {
        return Err(HarnessError::Undefined("kendall of a constant vector".into()));
    }
    // concordant - discordant = n0 - n1 - n2 + n3 - 2 * discordant
    let diff = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    let (dx, dy) = ((n0 - n1) as f64, (n0 - n2) as f64);
    let den = if n1 == n2 { dx } else { (dx * dy).sqrt() };
    Ok(diff as f64 / den)
}

/// Candidates ordered by descending score, ties by ascending id.
pub fn rank_desc(scores: &[f64], ids: &[&str]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => ids[a].cmp(ids[b]),
        o => o,
    });
    idx
}

/// Overlap of the predicted and true top-`k` candidate sets, over `k`.
pub fn precision_at_k(pred: &[f64], truth: &[f64], ids: &[&str], k: usize) -> Result<f64, HarnessError> {
    if pred.len() != truth.len() || ids.len() != pred.len() {
        return Err(HarnessError::Undefined("precision_at_k needs equal-length inputs".into()));
    }
    if k == 0 || k > pred.len() {
        return Err(HarnessError::Undefined(format!("k = {k} with {} candidates", pred.len())));
    }
    let mut top = vec![false; pred.len()];
    for &i in &rank_desc(truth, ids)[..k] {
        top[i] = true;
    }
    let hits = rank_desc(pred, ids)[..k].iter().filter(|&&i| top[i]).count();
    Ok(hits as f64 / k as f64)
}

pub fn mse(preds: &[f64], targets: &[f64]) -> f64 {
    let n = preds.len().max(1) as f64;
    preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n
}

impl MetricsRecord {
    pub fn csv_row(&self) -> [String; 7] {
        [
            self.mse.to_string(),
            self.spearman_rho.to_string(),
            self.kendall_tau.to_string(),
            self.p_at_10.to_string(),
            self.p_at_20.to_string(),
            self.num_pairs.to_string(),
            self.seconds.to_string(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5);
        assert_eq!(kendall(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 1.0 / 3.0);
        let x = [0.3, 0.1, 0.9, 0.5];
        let rev: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(spearman(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman(&x, &rev).unwrap(), -1.0);
        assert_eq!(kendall(&x, &x).unwrap(), 1.0);
        assert_eq!(kendall(&x, &rev).unwrap(), -1.0);
    }

    #[test]
    fn undefined_inputs() {
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(kendall(&[1.0, 2.0], &[3.0, 3.0]).is_err());
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(kendall(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(doubled_ranks(&[5.0, 1.0, 5.0, 2.0]), vec![7, 2, 7, 4]);
        assert_eq!(tied_pairs(&[1, 1, 1, 2, 3, 3]), 4);
    }

    #[test]
    fn precision_examples() {
        let ids = ["a", "b", "c", "d"];
        let t = [0.9, 0.8, 0.1, 0.0];
        assert_eq!(precision_at_k(&t, &t, &ids, 2).unwrap(), 1.0);
        assert_eq!(precision_at_k(&[0.0, 0.1, 0.8, 0.9], &t, &ids, 2).unwrap(), 0.0);
        assert_eq!(precision_at_k(&[0.0, 0.1, 0.8, 0.9], &t, &ids, 4).unwrap(), 1.0);
        // equal predictions fall back to id order: a, b
        assert_eq!(precision_at_k(&[0.5; 4], &t, &ids, 2).unwrap(), 1.0);
        assert!(precision_at_k(&t, &t, &ids, 5).is_err());
    }

    #[test]
    fn mse_example() {
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 0.0]), 0.5);
    }
}
