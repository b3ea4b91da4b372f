//! Chunked prefill planning against a fixed scratchpad.

use crate::error::{Error, Result};
use crate::operators::AttentionConfig;

/// Per-token tile elements in units of `d_h`: double-buffered Q, K, V and
/// output tiles.
pub const TILE_BYTES_PER_TOKEN_FACTOR: u64 = 8;
/// Per-token elements in units of `d_state`: double-buffered feature-map,
/// decay and state-update tiles.
pub const STATE_BYTES_PER_TOKEN_FACTOR: u64 = 16;

/// Scratchpad bytes needed to hold a chunk of `tokens` tokens.
pub fn working_set_bytes(tokens: u64, cfg: &AttentionConfig) -> u64 {
    let per_token = TILE_BYTES_PER_TOKEN_FACTOR * cfg.d_h as u64 + STATE_BYTES_PER_TOKEN_FACTOR * cfg.d_state as u64;
    tokens * per_token * cfg.precision_bytes
}

/// Peak footprint when all `n` tokens are processed in one pass.
pub fn monolithic_peak_bytes(n: u64, cfg: &AttentionConfig) -> u64 {
    working_set_bytes(n, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkPlan {
    pub chunk_tokens: u64,
    pub n_chunks: u64,
    pub peak_bytes: u64,
    /// State written back and reloaded between consecutive chunks.
    pub eviction_bytes: u64,
}

/// Eviction traffic for `n` tokens processed `chunk` at a time.
pub fn eviction_bytes(n: u64, chunk: u64, cfg: &AttentionConfig) -> u64 {
    let boundaries = n.div_ceil(chunk).saturating_sub(1);
    boundaries * 2 * cfg.d_state as u64 * cfg.d_h as u64 * cfg.precision_bytes
}

/// Largest chunk whose working set fits `scratchpad_bytes`, capped at `n`.
pub fn chunk_plan(n: u64, cfg: &AttentionConfig, scratchpad_bytes: u64) -> Result<ChunkPlan> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("n must be >= 1".into()));
    }
    let per_token = working_set_bytes(1, cfg);
    if per_token > scratchpad_bytes {
        return Err(Error::Capacity {
            required: per_token,
            capacity: scratchpad_bytes,
        });
    }
    let chunk_tokens = (scratchpad_bytes / per_token).min(n);
    Ok(ChunkPlan {
        chunk_tokens,
        n_chunks: n.div_ceil(chunk_tokens),
        peak_bytes: working_set_bytes(chunk_tokens, cfg),
        eviction_bytes: eviction_bytes(n, chunk_tokens, cfg),
    })
}
