//! Softmax-normalised operators: full causal, Toeplitz and retentive.

use super::AttentionConfig;
use crate::error::Result;
use crate::tensor::{matmul, scale, softmax_rows, transpose, Mask, Matrix, OpCounter};

/// How the retentive operator treats positions where the decay matrix is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RetentionMasking {
    /// Positions `j > i` are removed from the softmax domain, so they receive
    /// probability exactly zero and the operator stays causal.
    #[default]
    ExcludeOutOfSupport,
    /// `softmax(S ⊙ W)` taken literally: out-of-support scores become 0 and
    /// still receive softmax mass. Not causal; kept for comparison.
    Literal,
}

fn scores(q: &Matrix, k: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    let kt = transpose(k, counter)?;
    matmul(q, &kt, counter)
}

/// `softmax(QK^T / sqrt(d_h) + M) V` with `M` the causal `-inf` mask.
pub fn full_causal_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    cfg.check_inputs("full_causal_attention", q, k, v)?;
    let s = scores(q, k, counter)?;
    let s = scale(&s, 1.0 / (cfg.d_h as f32).sqrt(), counter)?;
    let p = softmax_rows(&s, Some(&Mask::causal(cfg.n)?), counter)?;
    matmul(&p, v, counter)
}

/// `gamma^k` by square-and-multiply, with the number of multiplications.
///
/// The count is `popcount(k) + bit_length(k) - 1` for `k >= 1` and zero for
/// `k = 0`.
pub fn decay_power(gamma: f32, k: u64) -> (f32, u64) {
    let mut result = 1.0f32;
    let mut base = gamma;
    let mut e = k;
    let mut mults = 0;
    while e > 0 {
        if e & 1 == 1 {
            result *= base;
            mults += 1;
        }
        e >>= 1;
        if e > 0 {
            base *= base;
            mults += 1;
        }
    }
    (result, mults)
}

/// Retentive attention with the default masking semantics.
pub fn retentive_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    retentive_attention_with(q, k, v, cfg, RetentionMasking::default(), counter)
}

/// `softmax((QK^T / sqrt(d_h)) ⊙ W) V` with `W[i][j] = gamma^(i-j)` for
/// `i >= j` and zero above the diagonal.
///
/// `W` is materialised densely over the causal triangle and every weight is
/// evaluated on its own by [`decay_power`]; there is no shared diagonal
/// profile as in [`toeplitz_attention`].
pub fn retentive_attention_with(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    masking: RetentionMasking,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    cfg.check_inputs("retentive_attention", q, k, v)?;
    let n = cfg.n;
    let mut s = scores(q, k, counter)?;
    let inv_sqrt = 1.0 / (cfg.d_h as f32).sqrt();

    let triangle = (n * (n + 1) / 2) as u64;
    let mut power_mults = 0u64;
    for i in 0..n {
        let row = s.row_mut(i);
        for (j, x) in row.iter_mut().enumerate() {
            if j <= i {
                let (w, mults) = decay_power(cfg.gamma, (i - j) as u64);
                power_mults += mults;
                *x = *x * inv_sqrt * w;
            } else if masking == RetentionMasking::Literal {
                *x = 0.0;
            }
        }
    }
    // decay weights written once; scale and decay multiply on the triangle
    counter.add_flops(power_mults + 2 * triangle);
    counter.add_traffic(2 * triangle, 2 * triangle);

    let p = match masking {
        RetentionMasking::ExcludeOutOfSupport => softmax_rows(&s, Some(&Mask::causal(n)?), counter)?,
        RetentionMasking::Literal => softmax_rows(&s, None, counter)?,
    };
    matmul(&p, v, counter)
}

/// Diagonal profile `[1, gamma, gamma^2, ...]` of length `n`, by running
/// product (`n - 1` flops).
pub fn toeplitz_profile(gamma: f32, n: usize, counter: &mut OpCounter) -> Vec<f32> {
    let mut profile = Vec::with_capacity(n);
    let mut w = 1.0f32;
    for k in 0..n {
        if k > 0 {
            w *= gamma;
        }
        profile.push(w);
    }
    counter.add_flops(n.saturating_sub(1) as u64);
    counter.add_traffic(0, n as u64);
    profile
}

/// `softmax(QK^T ⊙ W) V` with `W[i][j] = gamma^|i-j|`.
///
/// Only the length-`n` diagonal profile of `W` is stored. No causal mask and
/// no `1/sqrt(d_h)` scaling are applied.
pub fn toeplitz_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    cfg.check_inputs("toeplitz_attention", q, k, v)?;
    let n = cfg.n;
    let mut s = scores(q, k, counter)?;
    let profile = toeplitz_profile(cfg.gamma, n, counter);
    for i in 0..n {
        for (j, x) in s.row_mut(i).iter_mut().enumerate() {
            *x *= profile[i.abs_diff(j)];
        }
    }
    let all = (n * n) as u64;
    counter.add_flops(all);
    counter.add_traffic(all + n as u64, all);
    let p = softmax_rows(&s, None, counter)?;
    matmul(&p, v, counter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::random_inputs;

    #[test]
    fn decay_power_matches_powi_and_counts() {
        for k in 0..40u64 {
            let (v, mults) = decay_power(0.9, k);
            assert!((v - 0.9f32.powi(k as i32)).abs() < 1e-6, "k={k}");
            let expected = if k == 0 {
                0
            } else {
                k.count_ones() as u64 + (64 - k.leading_zeros() as u64) - 1
            };
            assert_eq!(mults, expected, "k={k}");
        }
    }

    #[test]
    fn single_token_returns_v() {
        let cfg = AttentionConfig::new(1, 3);
        let (q, k, v) = random_inputs(&cfg, 1).unwrap();
        let mut c = OpCounter::default();
        assert!(
            full_causal_attention(&q, &k, &v, &cfg, &mut c)
                .unwrap()
                .max_abs_diff(&v)
                < 1e-6
        );
        assert!(retentive_attention(&q, &k, &v, &cfg, &mut c).unwrap().max_abs_diff(&v) < 1e-6);
    }

    #[test]
    fn zero_queries_average_the_prefix() {
        let cfg = AttentionConfig::new(5, 2);
        let (_, _, v) = random_inputs(&cfg, 2).unwrap();
        let zero = Matrix::zeros(5, 2).unwrap();
        let mut c = OpCounter::default();
        let out = full_causal_attention(&zero, &zero, &v, &cfg, &mut c).unwrap();
        for i in 0..5 {
            for j in 0..2 {
                let mean = (0..=i).map(|r| v.get(r, j)).sum::<f32>() / (i + 1) as f32;
                assert!((out.get(i, j) - mean).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn retentive_with_unit_gamma_is_full_causal() {
        let cfg = AttentionConfig::new(7, 4).with_gamma(1.0);
        let (q, k, v) = random_inputs(&cfg, 3).unwrap();
        let mut c = OpCounter::default();
        let a = full_causal_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        let b = retentive_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-5);
    }

    /// As gamma -> 0 the past scores go to 0, not to -inf: row i keeps its
    /// diagonal score and spreads the rest uniformly over the prefix.
    #[test]
    fn vanishing_gamma_limit() {
        let cfg = AttentionConfig::new(5, 3).with_gamma(1e-30);
        let (q, k, v) = random_inputs(&cfg, 8).unwrap();
        let mut c = OpCounter::default();
        let out = retentive_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        let scale = 1.0 / 3f32.sqrt();
        for i in 0..5 {
            let diag: f32 = q.row(i).iter().zip(k.row(i)).map(|(a, b)| a * b).sum::<f32>() * scale;
            let w = diag.exp();
            for j in 0..3 {
                let past: f32 = (0..i).map(|r| v.get(r, j)).sum();
                let want = (w * v.get(i, j) + past) / (w + i as f32);
                assert!((out.get(i, j) - want).abs() < 1e-5, "row {i}");
            }
        }
    }

    #[test]
    fn literal_masking_leaks_future_mass() {
        let cfg = AttentionConfig::new(4, 2).with_gamma(0.5);
        let (q, k, v) = random_inputs(&cfg, 4).unwrap();
        let mut c = OpCounter::default();
        let masked = retentive_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        let literal = retentive_attention_with(&q, &k, &v, &cfg, RetentionMasking::Literal, &mut c).unwrap();
        // Row 0 can only see itself under the default semantics.
        assert!((masked.get(0, 0) - v.get(0, 0)).abs() < 1e-6);
        assert!((literal.get(0, 0) - v.get(0, 0)).abs() > 1e-3);
    }

    #[test]
    fn toeplitz_unit_gamma_is_plain_softmax_attention() {
        let cfg = AttentionConfig::new(6, 3).with_gamma(1.0);
        let (q, k, v) = random_inputs(&cfg, 5).unwrap();
        let mut c = OpCounter::default();
        let out = toeplitz_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        let s = matmul(&q, &transpose(&k, &mut c).unwrap(), &mut c).unwrap();
        let p = softmax_rows(&s, None, &mut c).unwrap();
        let plain = matmul(&p, &v, &mut c).unwrap();
        assert!(out.max_abs_diff(&plain) < 1e-6);
    }

    #[test]
    fn toeplitz_profile_entry() {
        let mut c = OpCounter::default();
        let gamma = 0.7f32;
        let profile = toeplitz_profile(gamma, 5, &mut c);
        // W[3][1] weights by gamma^2
        assert!((profile[3usize.abs_diff(1)] - gamma * gamma).abs() < 1e-7);
        assert_eq!(c.flops(), 4);
    }

    #[test]
    fn causal_flop_count_is_closed_form() {
        let (n, d) = (9u64, 4u64);
        let cfg = AttentionConfig::new(n as usize, d as usize);
        let (q, k, v) = random_inputs(&cfg, 6).unwrap();
        let mut c = OpCounter::default();
        full_causal_attention(&q, &k, &v, &cfg, &mut c).unwrap();
        assert_eq!(c.flops(), 4 * n * n * d + n * n + 2 * n * (n + 1));
    }
}
