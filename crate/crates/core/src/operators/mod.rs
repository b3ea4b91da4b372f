//! The five causal sequence-mixing operators and the structured masks that
//! visualise them.
//!
//! All operators take `n x d_h` query, key and value matrices and return an
//! `n x d_h` output. They are plain functions of their inputs (plus a seed for
//! the linear operator's projection), and report their arithmetic through the
//! supplied [`OpCounter`].

mod fourier;
mod linear;
mod masks;
mod softmax_family;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use fourier::{fourier_attention, fourier_attention_with};
pub use linear::{feature_map, linear_attention, projection_matrix};
pub use masks::{build_mask, MaskKind};
pub use softmax_family::{
    decay_power, full_causal_attention, retentive_attention, retentive_attention_with, toeplitz_attention,
    toeplitz_profile, RetentionMasking,
};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, OpCounter, DEFAULT_PRECISION_BYTES};

/// Shape and hyper-parameters shared by every operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    /// Sequence length in tokens.
    pub n: usize,
    /// Head dimension.
    pub d_h: usize,
    /// State / feature rank (linear attention, chunk planning).
    pub d_state: usize,
    /// Decay factor in `(0, 1]` for the Toeplitz and retentive operators.
    pub gamma: f32,
    /// Element size used for byte accounting, independent of the f32 numerics.
    pub precision_bytes: u64,
}

pub const DEFAULT_D_H: usize = 64;
pub const DEFAULT_D_STATE: usize = 16;
pub const DEFAULT_GAMMA: f32 = 0.9;

impl AttentionConfig {
    pub fn new(n: usize, d_h: usize) -> Self {
        Self {
            n,
            d_h,
            d_state: DEFAULT_D_STATE,
            gamma: DEFAULT_GAMMA,
            precision_bytes: DEFAULT_PRECISION_BYTES,
        }
    }

    pub fn with_d_state(mut self, d_state: usize) -> Self {
        self.d_state = d_state;
        self
    }

    pub fn with_gamma(mut self, gamma: f32) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_precision_bytes(mut self, bytes: u64) -> Self {
        self.precision_bytes = bytes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d_h == 0 || self.d_state == 0 {
            return Err(Error::InvalidConfig(format!(
                "n, d_h and d_state must be >= 1 (got n={}, d_h={}, d_state={})",
                self.n, self.d_h, self.d_state
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {}",
                self.gamma
            )));
        }
        if self.precision_bytes == 0 {
            return Err(Error::InvalidConfig("precision_bytes must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn check_inputs(&self, op: &'static str, q: &Matrix, k: &Matrix, v: &Matrix) -> Result<()> {
        self.validate()?;
        let want = (self.n, self.d_h);
        for (name, m) in [("q", q), ("k", k), ("v", v)] {
            if m.shape() != want {
                return Err(Error::shape(
                    op,
                    format!("{name} is {}x{}, expected {}x{}", m.rows(), m.cols(), want.0, want.1),
                ));
            }
        }
        Ok(())
    }
}

/// Operator tag used by the cost model, simulator and harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Operator {
    Causal,
    Retentive,
    Toeplitz,
    Linear,
    Fourier,
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Causal,
        Operator::Retentive,
        Operator::Toeplitz,
        Operator::Linear,
        Operator::Fourier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Operator::Causal => "causal",
            Operator::Retentive => "retentive",
            Operator::Toeplitz => "toeplitz",
            Operator::Linear => "linear",
            Operator::Fourier => "fourier",
        }
    }

    /// Runs the operator. `seed` only matters for [`Operator::Linear`].
    pub fn run(
        self,
        q: &Matrix,
        k: &Matrix,
        v: &Matrix,
        cfg: &AttentionConfig,
        seed: u64,
        counter: &mut OpCounter,
    ) -> Result<Matrix> {
        match self {
            Operator::Causal => full_causal_attention(q, k, v, cfg, counter),
            Operator::Retentive => retentive_attention(q, k, v, cfg, counter),
            Operator::Toeplitz => toeplitz_attention(q, k, v, cfg, counter),
            Operator::Linear => linear_attention(q, k, v, cfg, seed, counter),
            Operator::Fourier => fourier_attention(q, k, v, cfg, counter),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    /// Accepts the operator names and the benchmark acronyms
    /// (FSA, DRA, TSA, CLA), case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "causal" | "full_causal" | "full-causal" | "full causal" => Ok(Operator::Causal),
            "retentive" | "dra" => Ok(Operator::Retentive),
            "toeplitz" | "tsa" => Ok(Operator::Toeplitz),
            "linear" | "cla" => Ok(Operator::Linear),
            "fourier" | "fsa" => Ok(Operator::Fourier),
            _ => Err(Error::UnknownOperator(s.to_string())),
        }
    }
}

impl TryFrom<String> for Operator {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Operator> for String {
    fn from(op: Operator) -> Self {
        op.name().to_string()
    }
}

/// Deterministic standard-normal `q`, `k`, `v` for `cfg`.
pub fn random_inputs(cfg: &AttentionConfig, seed: u64) -> Result<(Matrix, Matrix, Matrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Result<Matrix> {
        let mut m = Matrix::zeros(cfg.n, cfg.d_h)?;
        for v in m.as_mut_slice() {
            *v = StandardNormal.sample(&mut rng);
        }
        Ok(m)
    };
    Ok((draw()?, draw()?, draw()?))
}
