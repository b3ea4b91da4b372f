//! Component-time model of an NPU with a matrix engine (DPU), vector cores
//! (SHAVE) and a DMA engine.
//!
//! Work is split per component, turned into time with a [`CalibrationProfile`]
//! and accounted serially: each component's share is its time over the sum.

mod calibrate;
mod chunk;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use calibrate::{
    fit_calibration, label_agreement, CalibrationProfile, FitGrid, FitReport, LatencyTarget, Overhead,
    UtilizationTarget,
};
pub use chunk::{
    chunk_plan, eviction_bytes, monolithic_peak_bytes, working_set_bytes, ChunkPlan, STATE_BYTES_PER_TOKEN_FACTOR,
    TILE_BYTES_PER_TOKEN_FACTOR,
};

use crate::cost::{analytic_breakdown, analytic_bytes};
use crate::error::{Error, Result};
use crate::operators::{AttentionConfig, Operator};

/// Share gap, in percentage points, below which the top two components tie.
pub const TIE_THRESHOLD_PCT: f64 = 2.0;

/// Per-component work for one operator invocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkDecomposition {
    pub operator: Operator,
    pub n: usize,
    /// Matrix products and transforms.
    pub dpu_ops: u64,
    /// All element-wise, softmax and exponential work.
    pub shave_ops: u64,
    /// The part of `shave_ops` that is transcendental or irregular (softmax,
    /// feature map, decay-power generation) and runs at the nonlinear rate.
    pub shave_nonlinear_ops: u64,
    /// Global memory to scratchpad traffic, including state concatenation.
    pub dma_bytes: u64,
}

impl WorkDecomposition {
    pub fn total_ops(&self) -> u64 {
        self.dpu_ops + self.shave_ops
    }
}

/// Bytes moved to concatenate transform stages: each of the four transforms
/// spills and reloads its complex `n x d_h` working array once per stage.
pub fn fourier_concat_bytes(cfg: &AttentionConfig) -> u64 {
    let n = cfg.n as u64;
    let stages = (64 - (n.max(1) - 1).leading_zeros()) as u64; // ceil(log2 n)
    4 * stages * 2 * n * cfg.d_h as u64 * 2 * cfg.precision_bytes
}

pub fn decompose(op: Operator, cfg: &AttentionConfig) -> Result<WorkDecomposition> {
    let ops = analytic_breakdown(op, cfg)?;
    let mut dma_bytes = analytic_bytes(op, cfg)?;
    if op == Operator::Fourier {
        dma_bytes += fourier_concat_bytes(cfg);
    }
    Ok(WorkDecomposition {
        operator: op,
        n: cfg.n,
        dpu_ops: ops.matmul + ops.transform,
        shave_ops: ops.streaming + ops.nonlinear,
        shave_nonlinear_ops: ops.nonlinear,
        dma_bytes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Dpu,
    Dma,
    Shave,
}

impl Component {
    /// Also the tie-breaking order.
    pub const ALL: [Component; 3] = [Component::Dpu, Component::Dma, Component::Shave];

    pub fn name(self) -> &'static str {
        match self {
            Component::Dpu => "DPU",
            Component::Dma => "DMA",
            Component::Shave => "SHAVE",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DPU" => Ok(Component::Dpu),
            "DMA" => Ok(Component::Dma),
            "SHAVE" => Ok(Component::Shave),
            other => Err(Error::InvalidConfig(format!("unknown component `{other}`"))),
        }
    }
}

/// Dominant component, or a tie of two (stored in [`Component::ALL`] order).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Bottleneck {
    Single(Component),
    Tie(Component, Component),
}

impl Bottleneck {
    pub fn tie(a: Component, b: Component) -> Self {
        if a <= b {
            Bottleneck::Tie(a, b)
        } else {
            Bottleneck::Tie(b, a)
        }
    }

    /// Labels shares given in [`Component::ALL`] order, in percent.
    pub fn classify(shares: [f64; 3]) -> Self {
        let mut order = [0usize, 1, 2];
        // stable: equal shares keep DPU, DMA, SHAVE order
        order.sort_by(|&a, &b| shares[b].total_cmp(&shares[a]));
        let (first, second) = (Component::ALL[order[0]], Component::ALL[order[1]]);
        if shares[order[0]] - shares[order[1]] < TIE_THRESHOLD_PCT {
            Bottleneck::tie(first, second)
        } else {
            Bottleneck::Single(first)
        }
    }
}

impl fmt::Display for Bottleneck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bottleneck::Single(c) => write!(f, "{c}"),
            Bottleneck::Tie(a, b) => write!(f, "{a} / {b}"),
        }
    }
}

impl FromStr for Bottleneck {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((a, b)) => Ok(Bottleneck::tie(a.parse()?, b.parse()?)),
            None => Ok(Bottleneck::Single(s.parse()?)),
        }
    }
}

impl TryFrom<String> for Bottleneck {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Bottleneck> for String {
    fn from(b: Bottleneck) -> Self {
        b.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub operator: Operator,
    pub n: usize,
    /// Seconds.
    pub t_dpu: f64,
    pub t_dma: f64,
    pub t_shave: f64,
    /// Percentages in [`Component::ALL`] order, summing to 100.
    pub shares: [f64; 3],
    pub bottleneck: Bottleneck,
}

impl SimResult {
    pub fn total_seconds(&self) -> f64 {
        self.t_dpu + self.t_dma + self.t_shave
    }

    pub fn share(&self, c: Component) -> f64 {
        self.shares[c as usize]
    }
}

pub fn simulate(work: &WorkDecomposition, calib: &CalibrationProfile) -> Result<SimResult> {
    calib.validate()?;
    let o = calib.overhead(work.operator);
    let streaming = (work.shave_ops - work.shave_nonlinear_ops) as f64;
    let t_dpu = (work.dpu_ops as f64 + o.dpu_ops) / (calib.dpu_rate_gops * 1e9);
    let t_shave = (streaming + o.shave_ops) / (calib.shave_rate_gops * 1e9)
        + work.shave_nonlinear_ops as f64 / (calib.shave_nonlinear_rate_gops * 1e9);
    let t_dma = (work.dma_bytes as f64 + o.dma_bytes) / (calib.dma_rate_gbs * 1e9);
    let total = t_dpu + t_dma + t_shave;
    let shares = if total > 0.0 {
        [100.0 * t_dpu / total, 100.0 * t_dma / total, 100.0 * t_shave / total]
    } else {
        [100.0 / 3.0; 3]
    };
    Ok(SimResult {
        operator: work.operator,
        n: work.n,
        t_dpu,
        t_dma,
        t_shave,
        shares,
        bottleneck: Bottleneck::classify(shares),
    })
}

/// Bottleneck labels over a context-length sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckSweep {
    pub operator: Operator,
    pub points: Vec<(usize, Bottleneck)>,
}

impl BottleneckSweep {
    /// `(n_before, n_after, from, to)` for every label change.
    pub fn transitions(&self) -> Vec<(usize, usize, Bottleneck, Bottleneck)> {
        self.points
            .windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| (w[0].0, w[1].0, w[0].1, w[1].1))
            .collect()
    }
}

/// `base` supplies everything except `n`.
pub fn sweep_bottlenecks(
    op: Operator,
    n_values: &[usize],
    base: &AttentionConfig,
    calib: &CalibrationProfile,
) -> Result<BottleneckSweep> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("n values must be strictly ascending".into()));
    }
    let points = n_values
        .iter()
        .map(|&n| {
            let cfg = AttentionConfig { n, ..*base };
            Ok((n, simulate(&decompose(op, &cfg)?, calib)?.bottleneck))
        })
        .collect::<Result<_>>()?;
    Ok(BottleneckSweep { operator: op, points })
}
