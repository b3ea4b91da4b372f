use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AttentionConfig;
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// The six structured mask families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskKind {
    FullCausal,
    Toeplitz,
    Fourier,
    RetentiveDecay,
    Semiseparable,
    LinearStructured,
}

impl MaskKind {
    pub const ALL: [MaskKind; 6] = [
        MaskKind::FullCausal,
        MaskKind::Toeplitz,
        MaskKind::Fourier,
        MaskKind::RetentiveDecay,
        MaskKind::Semiseparable,
        MaskKind::LinearStructured,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MaskKind::FullCausal => "full_causal",
            MaskKind::Toeplitz => "toeplitz",
            MaskKind::Fourier => "fourier",
            MaskKind::RetentiveDecay => "retentive_decay",
            MaskKind::Semiseparable => "semiseparable",
            MaskKind::LinearStructured => "linear_structured",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownOperator(s.to_string()))
    }
}

fn nonnegative_factor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.random::<f64>()).collect()
}

/// `n x n` picture of a mask family. Visualisation only; nothing here is
/// counted.
///
/// The Fourier mask is the real part of the DFT matrix, `cos(2 pi ij / n)`.
/// Semiseparable and linear-structured masks come from seeded non-negative
/// rank-`d_state` factors; the semiseparable one is restricted to the causal
/// triangle.
pub fn build_mask(kind: MaskKind, n: usize, cfg: &AttentionConfig, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("mask size must be >= 1".into()));
    }
    let gamma = cfg.gamma as f64;
    match kind {
        MaskKind::FullCausal => Matrix::from_fn(n, n, |i, j| if j <= i { 1.0 } else { 0.0 }),
        MaskKind::Toeplitz => Matrix::from_fn(n, n, |i, j| gamma.powi(i.abs_diff(j) as i32) as f32),
        MaskKind::RetentiveDecay => Matrix::from_fn(
            n,
            n,
            |i, j| {
                if j <= i {
                    gamma.powi((i - j) as i32) as f32
                } else {
                    0.0
                }
            },
        ),
        MaskKind::Fourier => Matrix::from_fn(n, n, |i, j| (2.0 * PI * ((i * j) % n) as f64 / n as f64).cos() as f32),
        MaskKind::Semiseparable | MaskKind::LinearStructured => {
            let r = cfg.d_state;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = nonnegative_factor(n, r, &mut rng);
            let b = nonnegative_factor(r, n, &mut rng);
            let causal_only = kind == MaskKind::Semiseparable;
            Matrix::from_fn(n, n, |i, j| {
                if causal_only && j > i {
                    return 0.0;
                }
                (0..r).map(|t| a[i * r + t] * b[t * n + j]).sum::<f64>() as f32
            })
        }
    }
}
