use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::AttentionConfig;
use crate::error::{Error, Result};
use crate::tensor::{matmul, transpose, Matrix, OpCounter};

/// Seeded Gaussian `d_h x d_state` projection with entries `N(0, 1/d_h)`.
pub fn projection_matrix(d_h: usize, d_state: usize, seed: u64) -> Result<Matrix> {
    let normal = Normal::new(0.0f32, 1.0 / (d_h as f32).sqrt()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Matrix::zeros(d_h, d_state)?;
    for v in p.as_mut_slice() {
        *v = normal.sample(&mut rng);
    }
    Ok(p)
}

/// `phi(x) = elu(x P) + 1`: a low-rank projection followed by a strictly
/// positive exponential-linear map (one flop per projected element).
pub fn feature_map(x: &Matrix, projection: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    let mut projected = matmul(x, projection, counter)?;
    for v in projected.as_mut_slice() {
        *v = if *v > 0.0 { *v + 1.0 } else { v.exp() };
    }
    let len = projected.len() as u64;
    counter.add_flops(len);
    counter.add_traffic(len, len);
    projected.ensure_finite("feature_map")
}

/// `phi(Q) (phi(K)^T V)`, evaluated right-to-left so no `n x n` matrix is
/// formed: `O(n * d_state * d_h)` work.
pub fn linear_attention(
    q: &Matrix,
    k: &Matrix,
    v: &Matrix,
    cfg: &AttentionConfig,
    projection_seed: u64,
    counter: &mut OpCounter,
) -> Result<Matrix> {
    cfg.check_inputs("linear_attention", q, k, v)?;
    let projection = projection_matrix(cfg.d_h, cfg.d_state, projection_seed)?;
    let phi_q = feature_map(q, &projection, counter)?;
    let phi_k = feature_map(k, &projection, counter)?;
    let phi_kt = transpose(&phi_k, counter)?;
    let state = matmul(&phi_kt, v, counter)?;
    matmul(&phi_q, &state, counter)
}
