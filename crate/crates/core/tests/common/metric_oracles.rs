//! Brute-force reference implementations of the ranking metrics.

use rand::Rng;

/// Doubled average ranks by counting: 2·(#less) + (#equal) + 1.
pub fn ranks_by_counting(xs: &[f64]) -> Vec<i128> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as i128;
            let equal = xs.iter().filter(|&&y| y == x).count() as i128;
            2 * less + equal + 1
        })
        .collect()
}

/// Pearson correlation of the ranks, accumulated around the mean in exact
/// integer arithmetic.
pub fn spearman_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as i128;
    let (rx, ry) = (ranks_by_counting(xs), ranks_by_counting(ys));
    // n·r - Σr removes the mean without fractions
    let (sx, sy): (i128, i128) = (rx.iter().sum(), ry.iter().sum());
    let cx: Vec<i128> = rx.iter().map(|r| n * r - sx).collect();
    let cy: Vec<i128> = ry.iter().map(|r| n * r - sy).collect();
    let cov: i128 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
    let vx: i128 = cx.iter().map(|a| a * a).sum();
    let vy: i128 = cy.iter().map(|b| b * b).sum();
    // both sums carry a factor n, which cancels
    let (cov, vx, vy) = (cov / n, vx / n, vy / n);
    if vx == vy {
        cov as f64 / vx as f64
    } else {
        cov as f64 / (vx as f64 * vy as f64).sqrt()
    }
}

/// 1 − 6Σd²/(n(n²−1)) for tie-free input, as one rounded division.
pub fn spearman_rank_formula(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as i128;
    let (rx, ry) = (ranks_by_counting(xs), ranks_by_counting(ys));
    let d2: i128 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum::<i128>() / 4;
    let den = n * (n * n - 1);
    (den - 6 * d2) as f64 / den as f64
}

pub fn kendall_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i128, 0i128, 0i128, 0i128);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i].partial_cmp(&xs[j]).unwrap();
            let dy = ys[i].partial_cmp(&ys[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    tx += 1;
                    ty += 1;
                }
                (Equal, _) => tx += 1,
                (_, Equal) => ty += 1,
                _ if dx == dy => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i128;
    let (a, b) = ((n0 - tx) as f64, (n0 - ty) as f64);
    let den = if tx == ty { a } else { (a * b).sqrt() };
    (conc - disc) as f64 / den
}

pub fn precision_oracle(pred: &[f64], truth: &[f64], ids: &[String], k: usize) -> f64 {
    let top = |s: &[f64]| -> Vec<usize> {
        let mut best = Vec::new();
        let mut left: Vec<usize> = (0..s.len()).collect();
        for _ in 0..k {
            // highest score, then smallest id
            let pos = (0..left.len())
                .max_by(|&a, &b| {
                    let (i, j) = (left[a], left[b]);
                    s[i].partial_cmp(&s[j]).unwrap().then(ids[j].cmp(&ids[i]))
                })
                .unwrap();
            best.push(left.remove(pos));
        }
        best
    };
    let (tp, tt) = (top(pred), top(truth));
    tp.iter().filter(|i| tt.contains(i)).count() as f64 / k as f64
}

pub fn random_vector(rng: &mut impl Rng, n: usize, levels: Option<u32>) -> Vec<f64> {
    (0..n)
        .map(|_| match levels {
            Some(l) => rng.gen_range(0..l) as f64 / l as f64,
            None => rng.gen::<f64>(),
        })
        .collect()
}
