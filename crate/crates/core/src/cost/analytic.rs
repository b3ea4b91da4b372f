//! Closed-form operation and traffic counts.
//!
//! The operation counts reproduce exactly what the instrumented kernels record.
//! The byte model is coarser than the kernels' per-pass `bytes_touched`: it
//! counts Q, K and V loaded once, the output written once, and each
//! materialised `n x n` intermediate written and re-read once.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::{random_inputs, AttentionConfig, Operator};
use crate::tensor::OpCounter;

/// Operations split by the kind of hardware that would execute them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpBreakdown {
    /// Dense matrix products.
    pub matmul: u64,
    /// Fast or direct Fourier transforms.
    pub transform: u64,
    /// Streaming element-wise work: scaling, decay weighting, Hadamard products.
    pub streaming: u64,
    /// Transcendental and irregular work: softmax, feature map, decay powers.
    pub nonlinear: u64,
}

impl OpBreakdown {
    pub fn total(&self) -> u64 {
        self.matmul + self.transform + self.streaming + self.nonlinear
    }
}

/// Multiplications spent evaluating `gamma^(i-j)` independently for every
/// entry of the causal triangle of an `n x n` matrix.
pub fn decay_generation_mults(n: u64) -> u64 {
    (1..n)
        .map(|k| (n - k) * (k.count_ones() as u64 + (64 - k.leading_zeros() as u64) - 1))
        .sum()
}

fn log2_exact(n: u64) -> Option<u64> {
    n.is_power_of_two().then(|| n.trailing_zeros() as u64)
}

/// Operation counts for `op` at `cfg`, identical to the kernel tallies.
pub fn analytic_breakdown(op: Operator, cfg: &AttentionConfig) -> Result<OpBreakdown> {
    cfg.validate()?;
    let n = cfg.n as u64;
    let d = cfg.d_h as u64;
    let r = cfg.d_state as u64;
    let triangle = n * (n + 1) / 2;
    let causal_softmax = 4 * triangle;
    Ok(match op {
        Operator::Causal => OpBreakdown {
            matmul: 4 * n * n * d,
            streaming: n * n,
            nonlinear: causal_softmax,
            ..Default::default()
        },
        Operator::Retentive => OpBreakdown {
            matmul: 4 * n * n * d,
            streaming: 2 * triangle,
            nonlinear: decay_generation_mults(n) + causal_softmax,
            ..Default::default()
        },
        Operator::Toeplitz => OpBreakdown {
            matmul: 4 * n * n * d,
            streaming: n * n,
            nonlinear: (n - 1) + 4 * n * n,
            ..Default::default()
        },
        Operator::Linear => OpBreakdown {
            matmul: 8 * n * r * d,
            nonlinear: 2 * n * r,
            ..Default::default()
        },
        Operator::Fourier => OpBreakdown {
            transform: match log2_exact(n) {
                Some(log_n) => 20 * d * n * log_n,
                None => 32 * d * n * n,
            },
            streaming: 14 * n * d,
            ..Default::default()
        },
    })
}

/// Modelled memory traffic in bytes.
pub fn analytic_bytes(op: Operator, cfg: &AttentionConfig) -> Result<u64> {
    cfg.validate()?;
    let n = cfg.n as u64;
    let d = cfg.d_h as u64;
    let r = cfg.d_state as u64;
    let io = 4 * n * d;
    let elements = match op {
        // scores written and re-read
        Operator::Causal => io + 2 * n * n,
        // plus the decay triangle, read once
        Operator::Retentive => io + 2 * n * n + n * (n + 1) / 2,
        // scores and weighted scores each written and re-read, dense decay read once
        Operator::Toeplitz => io + 5 * n * n,
        // only the d_state x d_h summary, no n x n term
        Operator::Linear => io + d * r,
        // product spectrum written and re-read, complex
        Operator::Fourier => io + 4 * n * d,
    };
    Ok(elements * cfg.precision_bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Counting {
    /// Closed-form counts and the traffic model above.
    #[default]
    Analytic,
    /// Runs the kernel on seeded inputs and reads its [`OpCounter`].
    Measured,
}

impl fmt::Display for Counting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Counting::Analytic => "analytic",
            Counting::Measured => "measured",
        })
    }
}

impl FromStr for Counting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Counting::Analytic),
            "measured" => Ok(Counting::Measured),
            other => Err(Error::InvalidConfig(format!("unknown counting mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostDescriptor {
    pub operator: Operator,
    pub ops: u64,
    pub bytes: u64,
    /// `ops / bytes`.
    pub intensity: f64,
}

impl CostDescriptor {
    pub fn new(operator: Operator, ops: u64, bytes: u64) -> Self {
        Self {
            operator,
            ops,
            bytes,
            intensity: ops as f64 / bytes as f64,
        }
    }
}

pub fn cost_descriptor(op: Operator, cfg: &AttentionConfig, counting: Counting) -> Result<CostDescriptor> {
    match counting {
        Counting::Analytic => Ok(CostDescriptor::new(
            op,
            analytic_breakdown(op, cfg)?.total(),
            analytic_bytes(op, cfg)?,
        )),
        Counting::Measured => {
            let (q, k, v) = random_inputs(cfg, 0)?;
            let mut counter = OpCounter::new(cfg.precision_bytes);
            op.run(&q, &k, &v, cfg, 0, &mut counter)?;
            Ok(CostDescriptor::new(op, counter.flops(), counter.bytes_touched()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::decay_power;

    #[test]
    fn decay_mults_match_kernel_helper() {
        for n in [1u64, 2, 5, 17, 64] {
            let brute: u64 = (0..n)
                .flat_map(|i| (0..=i).map(move |j| i - j))
                .map(|k| decay_power(0.9, k).1)
                .sum();
            assert_eq!(decay_generation_mults(n), brute, "n={n}");
        }
    }

    #[test]
    fn analytic_ops_equal_measured_ops() {
        for op in Operator::ALL {
            for n in [1usize, 7, 16, 33] {
                let cfg = AttentionConfig::new(n, 5).with_d_state(3);
                let a = cost_descriptor(op, &cfg, Counting::Analytic).unwrap();
                let m = cost_descriptor(op, &cfg, Counting::Measured).unwrap();
                assert_eq!(a.ops, m.ops, "{op} n={n}");
            }
        }
    }

    #[test]
    fn intensity_is_exact_quotient() {
        let cfg = AttentionConfig::new(256, 64);
        for op in Operator::ALL {
            let c = cost_descriptor(op, &cfg, Counting::Analytic).unwrap();
            assert!(c.intensity > 0.0);
            assert_eq!(c.intensity, c.ops as f64 / c.bytes as f64);
        }
    }

    #[test]
    fn linear_traffic_has_no_quadratic_term() {
        let b1 = analytic_bytes(Operator::Linear, &AttentionConfig::new(1000, 64)).unwrap();
        let b2 = analytic_bytes(Operator::Linear, &AttentionConfig::new(2000, 64)).unwrap();
        let fixed = 2 * 64 * 16;
        assert_eq!(b2 - fixed, 2 * (b1 - fixed));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = AttentionConfig::new(0, 4);
        assert!(analytic_breakdown(Operator::Causal, &cfg).is_err());
    }
}
