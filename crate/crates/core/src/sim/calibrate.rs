//! Component rates, per-operator overheads, and the grid search that fits
//! them to reference utilization shares.

use std::collections::BTreeMap;
use std::path::Path;

use super::{decompose, simulate, Bottleneck, SimResult, WorkDecomposition};
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::operators::{AttentionConfig, Operator};

const SHIPPED: &str = include_str!("../../data/calibration.cfg");

/// Fixed per-invocation cost, in work units so that it scales with the rates:
/// DPU ops, streaming SHAVE ops and DMA bytes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overhead {
    pub dpu_ops: f64,
    pub shave_ops: f64,
    pub dma_bytes: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    pub dpu_rate_gops: f64,
    /// Streaming element-wise rate.
    pub shave_rate_gops: f64,
    /// Rate for softmax, exponentials and decay-power generation.
    pub shave_nonlinear_rate_gops: f64,
    pub dma_rate_gbs: f64,
    pub overheads: BTreeMap<Operator, Overhead>,
}

impl Default for CalibrationProfile {
    /// The checked-in fitted profile.
    fn default() -> Self {
        Self::shipped()
    }
}

impl CalibrationProfile {
    pub fn shipped() -> Self {
        let kv = KeyValues::parse(SHIPPED, "data/calibration.cfg").expect("shipped calibration parses");
        Self::from_key_values(&kv).expect("shipped calibration is valid")
    }

    /// Every rate equal to `rate`, no overheads.
    pub fn uniform(rate: f64) -> Self {
        Self {
            dpu_rate_gops: rate,
            shave_rate_gops: rate,
            shave_nonlinear_rate_gops: rate,
            dma_rate_gbs: rate,
            overheads: BTreeMap::new(),
        }
    }

    /// All four rates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dpu_rate_gops: self.dpu_rate_gops * factor,
            shave_rate_gops: self.shave_rate_gops * factor,
            shave_nonlinear_rate_gops: self.shave_nonlinear_rate_gops * factor,
            dma_rate_gbs: self.dma_rate_gbs * factor,
            overheads: self.overheads.clone(),
        }
    }

    pub fn overhead(&self, op: Operator) -> Overhead {
        self.overheads.get(&op).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("dpu_rate_gops", self.dpu_rate_gops),
            ("shave_rate_gops", self.shave_rate_gops),
            ("shave_nonlinear_rate_gops", self.shave_nonlinear_rate_gops),
            ("dma_rate_gbs", self.dma_rate_gbs),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        for (op, o) in &self.overheads {
            if [o.dpu_ops, o.shave_ops, o.dma_bytes]
                .iter()
                .any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return Err(Error::InvalidConfig(format!("{op} overhead must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_key_values(&KeyValues::load(path)?)
    }

    /// Rates are required; `overhead.<operator>.<dpu_ops|shave_ops|dma_bytes>`
    /// keys are optional.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut rates: [Option<f64>; 4] = [None; 4];
        let mut overheads: BTreeMap<Operator, Overhead> = BTreeMap::new();
        for e in kv.entries() {
            let slot = match e.key.as_str() {
                "dpu_rate_gops" => Some(0),
                "shave_rate_gops" => Some(1),
                "shave_nonlinear_rate_gops" => Some(2),
                "dma_rate_gbs" => Some(3),
                _ => None,
            };
            if let Some(i) = slot {
                rates[i] = Some(kv.positive(e)?);
                continue;
            }
            let parts: Vec<&str> = e.key.split('.').collect();
            let [prefix, op, field] = parts[..] else {
                return Err(kv.unknown_key(e));
            };
            if prefix != "overhead" {
                return Err(kv.unknown_key(e));
            }
            let op: Operator = op.parse().map_err(|_| kv.unknown_key(e))?;
            let value = kv.non_negative(e)?;
            let o = overheads.entry(op).or_default();
            match field {
                "dpu_ops" => o.dpu_ops = value,
                "shave_ops" => o.shave_ops = value,
                "dma_bytes" => o.dma_bytes = value,
                _ => return Err(kv.unknown_key(e)),
            }
        }
        let names = [
            "dpu_rate_gops",
            "shave_rate_gops",
            "shave_nonlinear_rate_gops",
            "dma_rate_gbs",
        ];
        let mut got = [0.0; 4];
        for i in 0..4 {
            got[i] = rates[i].ok_or_else(|| Error::Parse {
                path: kv.path().to_path_buf(),
                line: 0,
                message: format!("missing required key `{}`", names[i]),
            })?;
        }
        Ok(Self {
            dpu_rate_gops: got[0],
            shave_rate_gops: got[1],
            shave_nonlinear_rate_gops: got[2],
            dma_rate_gbs: got[3],
            overheads,
        })
    }

    pub fn to_config_string(&self) -> String {
        let mut s = format!(
            "dpu_rate_gops = {}\nshave_rate_gops = {}\nshave_nonlinear_rate_gops = {}\ndma_rate_gbs = {}\n",
            self.dpu_rate_gops, self.shave_rate_gops, self.shave_nonlinear_rate_gops, self.dma_rate_gbs
        );
        for (op, o) in &self.overheads {
            s.push_str(&format!(
                "overhead.{op}.dpu_ops = {}\noverhead.{op}.shave_ops = {}\noverhead.{op}.dma_bytes = {}\n",
                o.dpu_ops, o.shave_ops, o.dma_bytes
            ));
        }
        s
    }
}

/// A reference utilization row: shares in percent (DPU, DMA, SHAVE) and the
/// reported label. Rows with `required = false` are reported but neither
/// counted nor fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilizationTarget {
    pub operator: Operator,
    pub n: usize,
    pub shares: [f64; 3],
    pub label: Bottleneck,
    pub required: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyTarget {
    pub operator: Operator,
    pub n: usize,
    pub latency_ms: f64,
}

/// Simulates every target under `calib`; returns the per-row results and
/// the number of required rows whose label matches.
pub fn label_agreement(
    calib: &CalibrationProfile,
    targets: &[UtilizationTarget],
    base: &AttentionConfig,
) -> Result<(Vec<SimResult>, usize)> {
    let mut results = Vec::with_capacity(targets.len());
    let mut matched = 0;
    for t in targets {
        let cfg = AttentionConfig { n: t.n, ..*base };
        let r = simulate(&decompose(t.operator, &cfg)?, calib)?;
        if t.required && r.bottleneck == t.label {
            matched += 1;
        }
        results.push(r);
    }
    Ok((results, matched))
}

/// Search space. Rates are fitted relative to the DPU rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitGrid {
    /// Candidate DMA, streaming SHAVE and nonlinear SHAVE rates over the DPU rate.
    pub rate_ratios: Vec<f64>,
    /// Candidate overheads (work units) for each component of each fitted operator.
    pub overheads: Vec<f64>,
    /// Local refinement rounds around the best grid point.
    pub refinements: usize,
}

fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
        .collect()
}

impl Default for FitGrid {
    fn default() -> Self {
        let mut overheads = vec![0.0];
        overheads.extend(logspace(4.0, 9.0, 11));
        Self {
            rate_ratios: logspace(-2.0, 2.0, 17),
            overheads,
            refinements: 2,
        }
    }
}

impl FitGrid {
    pub fn coarse() -> Self {
        let mut overheads = vec![0.0];
        overheads.extend(logspace(4.0, 9.0, 6));
        Self {
            rate_ratios: logspace(-2.0, 2.0, 9),
            overheads,
            refinements: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub profile: CalibrationProfile,
    pub matched: usize,
    pub required: usize,
    /// Sum of squared share errors (percentage points) over required rows.
    pub share_sse: f64,
    /// Rate multiplier applied to match reference latencies.
    pub latency_scale: f64,
}

#[derive(Clone, Copy)]
struct Score {
    matched: usize,
    sse: f64,
}

impl Score {
    fn better_than(&self, other: &Score) -> bool {
        self.matched > other.matched || (self.matched == other.matched && self.sse < other.sse)
    }
}

/// Shared rates relative to a unit DPU rate: (dma, shave, nonlinear).
type Rates = (f64, f64, f64);

fn score_operator(rows: &[(UtilizationTarget, WorkDecomposition)], rates: Rates, o: &Overhead) -> Score {
    let (dma, shave, nonlinear) = rates;
    let mut s = Score { matched: 0, sse: 0.0 };
    for (t, w) in rows {
        let streaming = (w.shave_ops - w.shave_nonlinear_ops) as f64;
        let times = [
            w.dpu_ops as f64 + o.dpu_ops,
            (w.dma_bytes as f64 + o.dma_bytes) / dma,
            (streaming + o.shave_ops) / shave + w.shave_nonlinear_ops as f64 / nonlinear,
        ];
        let total: f64 = times.iter().sum();
        let shares = times.map(|t| 100.0 * t / total);
        if Bottleneck::classify(shares) == t.label {
            s.matched += 1;
        }
        s.sse += shares.iter().zip(t.shares).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    s
}

fn best_overhead(
    rows: &[(UtilizationTarget, WorkDecomposition)],
    rates: Rates,
    candidates: [&[f64]; 3],
) -> (Overhead, Score) {
    let mut best = (
        Overhead::default(),
        Score {
            matched: 0,
            sse: f64::INFINITY,
        },
    );
    for &dpu_ops in candidates[0] {
        for &shave_ops in candidates[1] {
            for &dma_bytes in candidates[2] {
                let o = Overhead {
                    dpu_ops,
                    shave_ops,
                    dma_bytes,
                };
                let s = score_operator(rows, rates, &o);
                if s.better_than(&best.1) {
                    best = (o, s);
                }
            }
        }
    }
    best
}

fn around(value: f64, step_decades: f64, fallback: &[f64]) -> Vec<f64> {
    if value == 0.0 {
        return fallback.iter().copied().take(3).collect();
    }
    (-2..=2)
        .map(|k| value * 10f64.powf(k as f64 * step_decades / 4.0))
        .collect()
}

/// Grid search maximising label agreement on required rows, then minimising
/// share error; finally scales all rates so simulated latencies match
/// `latencies` in geometric mean (labels are unaffected by the scale).
pub fn fit_calibration(
    targets: &[UtilizationTarget],
    latencies: &[LatencyTarget],
    base: &AttentionConfig,
    grid: &FitGrid,
) -> Result<FitReport> {
    if grid.rate_ratios.is_empty() || grid.overheads.is_empty() {
        return Err(Error::InvalidConfig("fit grid must not be empty".into()));
    }
    let mut by_op: BTreeMap<Operator, Vec<(UtilizationTarget, WorkDecomposition)>> = BTreeMap::new();
    for t in targets.iter().filter(|t| t.required) {
        let cfg = AttentionConfig { n: t.n, ..*base };
        by_op
            .entry(t.operator)
            .or_default()
            .push((*t, decompose(t.operator, &cfg)?));
    }
    if by_op.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }

    let search = |ratios: [&[f64]; 3], overhead_grid: &dyn Fn(Operator) -> [Vec<f64>; 3]| {
        let mut best: Option<(Rates, BTreeMap<Operator, Overhead>, Score)> = None;
        for &dma in ratios[0] {
            for &shave in ratios[1] {
                for &nonlinear in ratios[2] {
                    let rates = (dma, shave, nonlinear);
                    let mut total = Score { matched: 0, sse: 0.0 };
                    let mut chosen = BTreeMap::new();
                    for (op, rows) in &by_op {
                        let cands = overhead_grid(*op);
                        let (o, s) = best_overhead(rows, rates, [&cands[0], &cands[1], &cands[2]]);
                        total.matched += s.matched;
                        total.sse += s.sse;
                        chosen.insert(*op, o);
                    }
                    if best.as_ref().is_none_or(|b| total.better_than(&b.2)) {
                        best = Some((rates, chosen, total));
                    }
                }
            }
        }
        best.expect("non-empty grid")
    };

    let full = grid.overheads.clone();
    let mut best = search([&grid.rate_ratios, &grid.rate_ratios, &grid.rate_ratios], &|_| {
        [full.clone(), full.clone(), full.clone()]
    });
    let mut ratio_step =
        (grid.rate_ratios.last().unwrap() / grid.rate_ratios[0]).log10() / (grid.rate_ratios.len().max(2) - 1) as f64;
    let positive: Vec<f64> = grid.overheads.iter().copied().filter(|v| *v > 0.0).collect();
    let mut overhead_step = match (positive.first(), positive.last()) {
        (Some(lo), Some(hi)) if positive.len() > 1 => (hi / lo).log10() / (positive.len() - 1) as f64,
        _ => 1.0,
    };
    for _ in 0..grid.refinements {
        let (rates, overheads, _) = best.clone();
        let r = [
            around(rates.0, ratio_step, &[]),
            around(rates.1, ratio_step, &[]),
            around(rates.2, ratio_step, &[]),
        ];
        let zero_fallback = [
            0.0,
            positive.first().copied().unwrap_or(0.0) / 10f64.powf(overhead_step / 2.0),
        ];
        let step = overhead_step;
        let refined = search([&r[0], &r[1], &r[2]], &|op| {
            let o = overheads.get(&op).copied().unwrap_or_default();
            [
                around(o.dpu_ops, step, &zero_fallback),
                around(o.shave_ops, step, &zero_fallback),
                around(o.dma_bytes, step, &zero_fallback),
            ]
        });
        if !best.2.better_than(&refined.2) {
            best = refined;
        }
        ratio_step /= 2.0;
        overhead_step /= 2.0;
    }

    let ((dma, shave, nonlinear), overheads, score) = best;
    let unit = CalibrationProfile {
        dpu_rate_gops: 1.0,
        shave_rate_gops: shave,
        shave_nonlinear_rate_gops: nonlinear,
        dma_rate_gbs: dma,
        overheads,
    };

    let mut log_sum = 0.0;
    for l in latencies {
        let cfg = AttentionConfig { n: l.n, ..*base };
        let r = simulate(&decompose(l.operator, &cfg)?, &unit)?;
        log_sum += (r.total_seconds() * 1e3 / l.latency_ms).ln();
    }
    let latency_scale = if latencies.is_empty() {
        1.0
    } else {
        (log_sum / latencies.len() as f64).exp()
    };

    Ok(FitReport {
        profile: unit.scaled(latency_scale),
        matched: score.matched,
        required: targets.iter().filter(|t| t.required).count(),
        share_sse: score.sse,
        latency_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Component;

    #[test]
    fn shipped_profile_is_valid_and_round_trips() {
        let p = CalibrationProfile::shipped();
        p.validate().unwrap();
        let kv = KeyValues::parse(&p.to_config_string(), "round.cfg").unwrap();
        assert_eq!(CalibrationProfile::from_key_values(&kv).unwrap(), p);
    }

    #[test]
    fn parse_errors() {
        let kv = KeyValues::parse("dpu_rate_gops = 1\n", "c.cfg").unwrap();
        assert!(matches!(
            CalibrationProfile::from_key_values(&kv),
            Err(Error::Parse { .. })
        ));
        let kv = KeyValues::parse(
            "dpu_rate_gops = 1\nshave_rate_gops = 1\nshave_nonlinear_rate_gops = 1\ndma_rate_gbs = 1\noverhead.bogus.dpu_ops = 1\n",
            "c.cfg",
        )
        .unwrap();
        assert!(matches!(
            CalibrationProfile::from_key_values(&kv),
            Err(Error::Parse { line: 5, .. })
        ));
        let kv = KeyValues::parse("dpu_rate_gops = 0\n", "c.cfg").unwrap();
        assert!(matches!(
            CalibrationProfile::from_key_values(&kv),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn fit_recovers_labels_generated_by_a_known_profile() {
        let base = AttentionConfig::new(1, 64);
        let mut truth = CalibrationProfile::uniform(1.0);
        truth.dma_rate_gbs = 0.5;
        truth.shave_nonlinear_rate_gops = 0.02;
        let targets: Vec<UtilizationTarget> = [128usize, 512, 2048]
            .into_iter()
            .flat_map(|n| [Operator::Retentive, Operator::Fourier].map(|op| (op, n)))
            .map(|(op, n)| {
                let r = simulate(&decompose(op, &AttentionConfig { n, ..base }).unwrap(), &truth).unwrap();
                UtilizationTarget {
                    operator: op,
                    n,
                    shares: r.shares,
                    label: r.bottleneck,
                    required: true,
                }
            })
            .collect();
        let fit = fit_calibration(&targets, &[], &base, &FitGrid::coarse()).unwrap();
        assert_eq!(fit.matched, targets.len());
        let (_, matched) = label_agreement(&fit.profile, &targets, &base).unwrap();
        assert_eq!(matched, targets.len());
        assert!(targets.iter().any(|t| t.label == Bottleneck::Single(Component::Shave)));
    }
}
