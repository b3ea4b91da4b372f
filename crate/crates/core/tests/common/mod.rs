//! Brute-force f64 references. Written from the operator definitions, not
//! from the library code paths.

#![allow(dead_code)]

use causal_roofline::operators::projection_matrix;
use causal_roofline::{AttentionConfig, Matrix, Operator};

pub type Rows = Vec<Vec<f64>>;

pub fn to_f64(m: &Matrix) -> Rows {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(f64::from).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_j w_j v_j / sum_j w_j` with `w_j = exp(s_j - max)` over `support`.
fn softmax_mix(scores: &[f64], support: &[usize], v: &Rows) -> Vec<f64> {
    let max = support.iter().map(|&j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; v[0].len()];
    let mut z = 0.0;
    for &j in support {
        let w = (scores[j] - max).exp();
        z += w;
        for (o, x) in out.iter_mut().zip(&v[j]) {
            *o += w * x;
        }
    }
    out.iter_mut().for_each(|o| *o /= z);
    out
}

pub fn causal(q: &Rows, k: &Rows, v: &Rows) -> Rows {
    let d = q[0].len() as f64;
    (0..q.len())
        .map(|i| {
            let s: Vec<f64> = k.iter().map(|kj| dot(&q[i], kj) / d.sqrt()).collect();
            softmax_mix(&s, &(0..=i).collect::<Vec<_>>(), v)
        })
        .collect()
}

pub fn retentive(q: &Rows, k: &Rows, v: &Rows, gamma: f64) -> Rows {
    let d = q[0].len() as f64;
    (0..q.len())
        .map(|i| {
            let s: Vec<f64> = (0..k.len())
                .map(|j| {
                    if j <= i {
                        dot(&q[i], &k[j]) / d.sqrt() * gamma.powi((i - j) as i32)
                    } else {
                        0.0
                    }
                })
                .collect();
            softmax_mix(&s, &(0..=i).collect::<Vec<_>>(), v)
        })
        .collect()
}

pub fn toeplitz(q: &Rows, k: &Rows, v: &Rows, gamma: f64) -> Rows {
    let n = q.len();
    (0..n)
        .map(|i| {
            let s: Vec<f64> = (0..n)
                .map(|j| dot(&q[i], &k[j]) * gamma.powi(i.abs_diff(j) as i32))
                .collect();
            softmax_mix(&s, &(0..n).collect::<Vec<_>>(), v)
        })
        .collect()
}

fn elu_plus_one(x: f64) -> f64 {
    if x > 0.0 {
        x + 1.0
    } else {
        x.exp()
    }
}

/// `out_i = sum_j (phi(q_i) . phi(k_j)) v_j`, the left-to-right association.
pub fn linear(q: &Rows, k: &Rows, v: &Rows, d_state: usize, seed: u64) -> Rows {
    let p = to_f64(&projection_matrix(q[0].len(), d_state, seed).unwrap());
    let phi = |x: &Vec<f64>| -> Vec<f64> {
        (0..d_state)
            .map(|r| elu_plus_one(x.iter().enumerate().map(|(t, xt)| xt * p[t][r]).sum()))
            .collect()
    };
    let pq: Rows = q.iter().map(phi).collect();
    let pk: Rows = k.iter().map(phi).collect();
    pq.iter()
        .map(|qi| {
            let mut out = vec![0.0; v[0].len()];
            for (kj, vj) in pk.iter().zip(v) {
                let w = dot(qi, kj);
                out.iter_mut().zip(vj).for_each(|(o, x)| *o += w * x);
            }
            out
        })
        .collect()
}

/// Time-domain form: circular cross-correlation of `q` with `k`, then
/// circular convolution with `v`, per column.
pub fn fourier(q: &Rows, k: &Rows, v: &Rows) -> Rows {
    let n = q.len();
    let d = q[0].len();
    let mut out = vec![vec![0.0; d]; n];
    for c in 0..d {
        let corr: Vec<f64> = (0..n)
            .map(|m| (0..n).map(|t| q[(t + m) % n][c] * k[t][c]).sum())
            .collect();
        for (i, row) in out.iter_mut().enumerate() {
            row[c] = (0..n).map(|m| corr[m] * v[(i + n - m) % n][c]).sum();
        }
    }
    out
}

pub fn oracle(op: Operator, q: &Matrix, k: &Matrix, v: &Matrix, cfg: &AttentionConfig, seed: u64) -> Rows {
    let (q, k, v) = (to_f64(q), to_f64(k), to_f64(v));
    let gamma = f64::from(cfg.gamma);
    match op {
        Operator::Causal => causal(&q, &k, &v),
        Operator::Retentive => retentive(&q, &k, &v, gamma),
        Operator::Toeplitz => toeplitz(&q, &k, &v, gamma),
        Operator::Linear => linear(&q, &k, &v, cfg.d_state, seed),
        Operator::Fourier => fourier(&q, &k, &v),
    }
}

/// `max |a - b| / max(1, max |b|)`.
pub fn rel_err(a: &Matrix, b: &Rows) -> f64 {
    let a = to_f64(a);
    let scale = b.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

pub fn naive_matmul(a: &Rows, b: &Rows) -> Rows {
    a.iter()
        .map(|r| {
            (0..b[0].len())
                .map(|j| r.iter().zip(b).map(|(x, bk)| x * bk[j]).sum())
                .collect()
        })
        .collect()
}
