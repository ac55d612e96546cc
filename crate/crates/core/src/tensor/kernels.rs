//! Row-major dense kernels shared by forward and backward passes.

/// `c += a[m,k] · b[k,n]`
pub fn mm_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += x * bv;
            }
        }
    }
}

/// `c += a[m,k] · b[n,k]ᵀ`
pub fn mm_nt_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            c[i * n + j] += arow.iter().zip(brow).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

/// `c += a[k,m]ᵀ · b[k,n]`
pub fn mm_tn_acc(a: &[f64], b: &[f64], c: &mut [f64], k: usize, m: usize, n: usize) {
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let x = a[p * m + i];
            if x == 0.0 {
                continue;
            }
            let crow = &mut c[i * n..(i + 1) * n];
            for (cv, bv) in crow.iter_mut().zip(brow) {
                *cv += x * bv;
            }
        }
    }
}

pub struct ConvDims {
    pub cin: usize,
    pub cout: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
}

/// Stride-1 convolution with zero "same" padding; returns `[cout, h, w]`.
pub fn conv2d(x: &[f64], wt: &[f64], bias: &[f64], d: &ConvDims) -> Vec<f64> {
    let ConvDims { cin, cout, h, w, k } = *d;
    let pad = k / 2;
    let mut out = vec![0.0; cout * h * w];
    for o in 0..cout {
        let plane = &mut out[o * h * w..(o + 1) * h * w];
        plane.iter_mut().for_each(|v| *v = bias[o]);
        for c in 0..cin {
            let xin = &x[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = wt[((o * cin + c) * k + ky) * k + kx];
                    if wv == 0.0 {
                        continue;
                    }
                    for y in 0..h {
                        let sy = y as isize + ky as isize - pad as isize;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let srow = &xin[sy as usize * w..(sy as usize + 1) * w];
                        let orow = &mut plane[y * w..(y + 1) * w];
                        let (lo, hi) = col_range(w, kx, pad);
                        for xo in lo..hi {
                            orow[xo] += wv * srow[xo + kx - pad];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Output columns whose source column `x + kx - pad` is in range.
fn col_range(w: usize, kx: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(kx);
    let hi = (w + pad).saturating_sub(kx).min(w);
    (lo, hi.max(lo))
}

/// Gradients of [`conv2d`] with respect to input, weights and bias.
pub fn conv2d_backward(
    x: &[f64],
    wt: &[f64],
    gout: &[f64],
    d: &ConvDims,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let ConvDims { cin, cout, h, w, k } = *d;
    let pad = k / 2;
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; wt.len()];
    let mut gb = vec![0.0; cout];
    for o in 0..cout {
        let gplane = &gout[o * h * w..(o + 1) * h * w];
        gb[o] = gplane.iter().sum();
        for c in 0..cin {
            let xin = &x[c * h * w..(c + 1) * h * w];
            let gxin = &mut gx[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let widx = ((o * cin + c) * k + ky) * k + kx;
                    let wv = wt[widx];
                    let mut acc = 0.0;
                    for y in 0..h {
                        let sy = y as isize + ky as isize - pad as isize;
                        if sy < 0 || sy >= h as isize {
                            continue;
                        }
                        let base = sy as usize * w;
                        let grow = &gplane[y * w..(y + 1) * w];
                        let (lo, hi) = col_range(w, kx, pad);
                        for xo in lo..hi {
                            let si = base + xo + kx - pad;
                            acc += grow[xo] * xin[si];
                            gxin[si] += grow[xo] * wv;
                        }
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    (gx, gw, gb)
}

/// 2×2 max pooling with stride 2, flooring odd extents. Returns the pooled
/// values and, per output, the flat input index of the first maximum.
pub fn maxpool2(x: &[f64], c: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for xo in 0..ow {
                let mut best = usize::MAX;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let i = ch * h * w + (2 * y + dy) * w + 2 * xo + dx;
                    if best == usize::MAX || x[i] > x[best] {
                        best = i;
                    }
                }
                out.push(x[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}
