//! Reference measurement tables, embedded from `data/reference/*.csv`.
//!
//! Every row keeps the caption of the table it was transcribed from in its
//! `source` column. Values are stored exactly as printed.

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::sim::{Bottleneck, LatencyTarget, UtilizationTarget};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HardwareSpecRow {
    pub component: String,
    pub specification: String,
    pub relevance: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct UtilizationRow {
    pub operator: Operator,
    pub n: usize,
    pub dpu_pct: f64,
    pub dma_pct: f64,
    pub shave_pct: f64,
    pub bottleneck: Bottleneck,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LatencyRow {
    pub operator: Operator,
    pub n: usize,
    pub latency_ms: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PerfSummaryRow {
    pub operator: Operator,
    pub n: usize,
    pub latency_ms: f64,
    pub throughput_ops_s: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EfficiencyRow {
    pub operator: Operator,
    pub n: usize,
    pub stall_pct: f64,
    pub cache_pct: f64,
    pub reuse_ms: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HwUtilizationRow {
    pub operator: Operator,
    pub n: usize,
    pub stall_pct: f64,
    pub cache_pct: f64,
    pub compute_util_pct: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DStateRow {
    pub operator: Operator,
    pub n: usize,
    pub d_state: usize,
    pub latency_ms: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct IntensityRow {
    pub operator: Operator,
    pub n: usize,
    pub d_h: usize,
    pub precision_bytes: u64,
    pub intensity: f64,
    pub measured_gops: f64,
    pub bound_gops: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FigureLabelRow {
    pub operator: Operator,
    pub utilization_pct: f64,
    pub mode: String,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ClaimRow {
    pub claim: String,
    pub value: f64,
    pub source: String,
}

/// Rows reported by the utilization table but not required of the simulator:
/// the Fourier 8192 row reverts to DPU-bound with no stated mechanism.
pub const ANOMALOUS_UTILIZATION_ROWS: [(Operator, usize); 1] = [(Operator::Fourier, 8192)];

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDataset {
    pub hardware_specs: Vec<HardwareSpecRow>,
    pub utilization: Vec<UtilizationRow>,
    pub latency_scaling: Vec<LatencyRow>,
    pub perf_summary: Vec<PerfSummaryRow>,
    pub efficiency: Vec<EfficiencyRow>,
    pub hw_utilization: Vec<HwUtilizationRow>,
    pub d_state_impact: Vec<DStateRow>,
    pub intensity: Vec<IntensityRow>,
    pub figure_labels: Vec<FigureLabelRow>,
    pub text_claims: Vec<ClaimRow>,
}

fn parse_table<T: DeserializeOwned>((table, text): (&'static str, &str)) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Dataset {
            table,
            message: e.to_string(),
        })?;
    if rows.is_empty() {
        return Err(Error::Dataset {
            table,
            message: "no rows".into(),
        });
    }
    Ok(rows)
}

macro_rules! embedded {
    ($name:literal) => {
        ($name, include_str!(concat!("../../data/reference/", $name, ".csv")))
    };
}

impl ReferenceDataset {
    pub fn embedded() -> Result<Self> {
        Ok(Self {
            hardware_specs: parse_table(embedded!("hardware_specs"))?,
            utilization: parse_table(embedded!("utilization"))?,
            latency_scaling: parse_table(embedded!("latency_scaling"))?,
            perf_summary: parse_table(embedded!("perf_summary"))?,
            efficiency: parse_table(embedded!("efficiency"))?,
            hw_utilization: parse_table(embedded!("hw_utilization_4096"))?,
            d_state_impact: parse_table(embedded!("d_state_impact"))?,
            intensity: parse_table(embedded!("intensity"))?,
            figure_labels: parse_table(embedded!("figure_labels"))?,
            text_claims: parse_table(embedded!("text_claims"))?,
        })
    }

    pub fn claim(&self, name: &str) -> Result<f64> {
        self.text_claims
            .iter()
            .find(|c| c.claim == name)
            .map(|c| c.value)
            .ok_or_else(|| Error::Dataset {
                table: "text_claims",
                message: format!("no claim `{name}`"),
            })
    }

    pub fn intensity_row(&self, op: Operator) -> Result<&IntensityRow> {
        self.intensity
            .iter()
            .find(|r| r.operator == op)
            .ok_or_else(|| Error::Dataset {
                table: "intensity",
                message: format!("no row for {op}"),
            })
    }

    /// Utilization rows as simulator targets; anomalous rows are marked not
    /// required.
    pub fn utilization_targets(&self) -> Vec<UtilizationTarget> {
        self.utilization
            .iter()
            .map(|r| UtilizationTarget {
                operator: r.operator,
                n: r.n,
                shares: [r.dpu_pct, r.dma_pct, r.shave_pct],
                label: r.bottleneck,
                required: !ANOMALOUS_UTILIZATION_ROWS.contains(&(r.operator, r.n)),
            })
            .collect()
    }

    /// Latency-scaling rows for the given operators.
    pub fn latency_targets(&self, ops: &[Operator]) -> Vec<LatencyTarget> {
        self.latency_scaling
            .iter()
            .filter(|r| ops.contains(&r.operator))
            .map(|r| LatencyTarget {
                operator: r.operator,
                n: r.n,
                latency_ms: r.latency_ms,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Component;

    #[test]
    fn spot_checks() {
        let d = ReferenceDataset::embedded().unwrap();
        let causal = d.efficiency.iter().find(|r| r.operator == Operator::Causal).unwrap();
        assert_eq!((causal.stall_pct, causal.cache_pct), (96.7, 7.7));
        let toeplitz = d.efficiency.iter().find(|r| r.operator == Operator::Toeplitz).unwrap();
        assert_eq!(toeplitz.cache_pct, 87.9);
        assert_eq!(d.intensity_row(Operator::Fourier).unwrap().measured_gops, 0.34);
        let lin = d
            .latency_scaling
            .iter()
            .find(|r| r.operator == Operator::Linear && r.n == 8192)
            .unwrap();
        assert_eq!(lin.latency_ms, 3.16);
    }

    #[test]
    fn table_shapes() {
        let d = ReferenceDataset::embedded().unwrap();
        assert_eq!(d.hardware_specs.len(), 7);
        assert_eq!(d.utilization.len(), 14);
        assert_eq!(d.latency_scaling.len(), 28);
        assert_eq!(d.perf_summary.len(), 10);
        assert_eq!(d.intensity.len(), 5);
        assert_eq!(d.figure_labels.len(), 5);
        let targets = d.utilization_targets();
        assert_eq!(targets.iter().filter(|t| t.required).count(), 13);
        let tie = targets
            .iter()
            .find(|t| t.operator == Operator::Fourier && t.n == 512)
            .unwrap();
        assert_eq!(tie.label, Bottleneck::Tie(Component::Dpu, Component::Dma));
        for row in &d.utilization {
            let sum = row.dpu_pct + row.dma_pct + row.shave_pct;
            assert!((sum - 100.0).abs() < 0.15, "{} {}", row.operator, row.n);
        }
    }

    #[test]
    fn every_row_has_a_source() {
        let d = ReferenceDataset::embedded().unwrap();
        assert!(d.utilization.iter().all(|r| !r.source.is_empty()));
        assert!(d.text_claims.iter().all(|r| !r.source.is_empty()));
        assert!(d.claim("chunk_tokens").unwrap() == 2048.0);
        assert!(d.claim("nope").is_err());
    }
}
