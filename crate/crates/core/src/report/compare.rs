//! Side-by-side checks of reference values against recomputed ones.
//!
//! Three classes of metric: arithmetic identities (must match), calibrated
//! reproductions (must land within a tolerance) and informational rows that
//! record known inconsistencies or host-only numbers and never fail.

use std::fmt;
use std::str::FromStr;

use super::dataset::{ReferenceDataset, ANOMALOUS_UTILIZATION_ROWS};
use super::format::fmt_sig;
use crate::cost::{
    cost_descriptor, critical_intensity, roofline_bound, smallest_kv_cache_above, utilization, Counting, NpuDescriptor,
    UtilizationMode,
};
use crate::error::{Error, Result};
use crate::operators::{AttentionConfig, Operator};
use crate::sim::{
    chunk_plan, decompose, label_agreement, monolithic_peak_bytes, simulate, Bottleneck, CalibrationProfile, Component,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricClass {
    Identity,
    Calibrated,
    Informational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Match,
    WithinTolerance,
    Informational,
    Fail,
}

impl MetricClass {
    pub fn name(self) -> &'static str {
        match self {
            MetricClass::Identity => "identity",
            MetricClass::Calibrated => "calibrated",
            MetricClass::Informational => "informational",
        }
    }
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Match => "match",
            Verdict::WithinTolerance => "within_tolerance",
            Verdict::Informational => "informational",
            Verdict::Fail => "fail",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub metric: String,
    pub class: MetricClass,
    pub reference: String,
    pub artifact: String,
    /// `(artifact - reference) / |reference|` for numeric rows.
    pub rel_delta: Option<f64>,
    pub verdict: Verdict,
    pub note: String,
}

fn rel(reference: f64, artifact: f64) -> Option<f64> {
    (reference != 0.0).then(|| (artifact - reference) / reference.abs())
}

impl ComparisonRow {
    /// Match when `|artifact - reference| <= abs_tol`, else fail.
    pub fn identity(metric: impl Into<String>, reference: f64, artifact: f64, abs_tol: f64) -> Self {
        Self {
            metric: metric.into(),
            class: MetricClass::Identity,
            reference: fmt_sig(reference),
            artifact: fmt_sig(artifact),
            rel_delta: rel(reference, artifact),
            verdict: if (artifact - reference).abs() <= abs_tol {
                Verdict::Match
            } else {
                Verdict::Fail
            },
            note: format!("tolerance +/-{}", fmt_sig(abs_tol)),
        }
    }

    /// Within tolerance when `|relative delta| <= rel_tol`, else fail.
    pub fn calibrated(metric: impl Into<String>, reference: f64, artifact: f64, rel_tol: f64) -> Self {
        let rel_delta = rel(reference, artifact);
        Self {
            metric: metric.into(),
            class: MetricClass::Calibrated,
            reference: fmt_sig(reference),
            artifact: fmt_sig(artifact),
            rel_delta,
            verdict: if rel_delta.is_some_and(|d| d.abs() <= rel_tol) {
                Verdict::WithinTolerance
            } else {
                Verdict::Fail
            },
            note: format!("relative tolerance {}%", fmt_sig(100.0 * rel_tol)),
        }
    }

    /// A non-numeric check in the given class.
    pub fn check(
        metric: impl Into<String>,
        class: MetricClass,
        reference: impl Into<String>,
        artifact: impl Into<String>,
        ok: bool,
        note: impl Into<String>,
    ) -> Self {
        Self {
            metric: metric.into(),
            class,
            reference: reference.into(),
            artifact: artifact.into(),
            rel_delta: None,
            verdict: if ok { Verdict::Match } else { Verdict::Fail },
            note: note.into(),
        }
    }

    pub fn informational(metric: impl Into<String>, reference: f64, artifact: f64, note: impl Into<String>) -> Self {
        Self {
            metric: metric.into(),
            class: MetricClass::Informational,
            reference: fmt_sig(reference),
            artifact: fmt_sig(artifact),
            rel_delta: rel(reference, artifact),
            verdict: Verdict::Informational,
            note: note.into(),
        }
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Suite {
    Identities,
    Calibrated,
    #[default]
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "calibrated" => Ok(Suite::Calibrated),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!(
                "unknown suite `{other}` (expected identities, calibrated or all)"
            ))),
        }
    }
}

fn mode_of(label: &str) -> Result<UtilizationMode> {
    label.parse()
}

/// True when some latency inside the printed value's rounding interval
/// (two decimals) gives a reciprocal that rounds to `throughput`.
pub fn throughput_consistent_with_rounding(latency_ms: f64, throughput: f64) -> bool {
    let lo = 1000.0 / (latency_ms + 0.005);
    let hi = 1000.0 / (latency_ms - 0.005);
    throughput + 0.5 >= lo && throughput - 0.5 <= hi
}

/// Recomputes every cell of the reference tables that follows from other
/// cells, and records the known internal inconsistencies as informational.
pub fn verify_reference_identities(data: &ReferenceDataset, npu: &NpuDescriptor) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();

    rows.push(ComparisonRow::identity(
        "effective compute ceiling (GOP/s)",
        data.claim("effective_compute_gops")?,
        npu.effective_compute(),
        1e-9,
    ));
    rows.push(ComparisonRow::identity(
        "effective bandwidth ceiling (GB/s)",
        data.claim("effective_bandwidth_gbs")?,
        npu.effective_bandwidth(),
        1e-9,
    ));
    rows.push(ComparisonRow::identity(
        "critical intensity (Ops/Byte)",
        data.claim("critical_intensity")?,
        critical_intensity(npu),
        0.5,
    ));

    for r in &data.intensity {
        rows.push(ComparisonRow::identity(
            format!("{} roofline bound (GOP/s)", r.operator),
            r.bound_gops,
            roofline_bound(r.intensity, npu),
            0.05,
        ));
    }

    for label in &data.figure_labels {
        let point = data.intensity_row(label.operator)?;
        let mode = mode_of(&label.mode)?;
        let pct = 100.0 * utilization(point.measured_gops, point.intensity, npu, mode);
        rows.push(ComparisonRow::identity(
            format!("{} utilization, {} (%)", label.operator, mode),
            label.utilization_pct,
            pct,
            0.1,
        ));
        if mode == UtilizationMode::ComputeRoofRelative {
            let other = 100.0
                * utilization(
                    point.measured_gops,
                    point.intensity,
                    npu,
                    UtilizationMode::BoundRelative,
                );
            rows.push(ComparisonRow::informational(
                format!("{} utilization, bound_relative (%)", label.operator),
                label.utilization_pct,
                other,
                "the label uses the compute-roof denominator while the other labels use the roofline bound",
            ));
        }
        if let Some(hw) = data.hw_utilization.iter().find(|h| h.operator == label.operator) {
            rows.push(ComparisonRow::identity(
                format!("{} compute utilization, table vs figure (%)", label.operator),
                label.utilization_pct,
                hw.compute_util_pct,
                0.0,
            ));
        }
    }

    for r in &data.perf_summary {
        let reciprocal = 1000.0 / r.latency_ms;
        rows.push(ComparisonRow::check(
            format!("{} N={} throughput from latency (ops/s)", r.operator, r.n),
            MetricClass::Identity,
            fmt_sig(r.throughput_ops_s),
            fmt_sig(reciprocal),
            throughput_consistent_with_rounding(r.latency_ms, r.throughput_ops_s),
            "1000/latency over the printed latency's rounding interval",
        ));
        if (reciprocal.round() - r.throughput_ops_s).abs() > 1.0 {
            rows.push(ComparisonRow::informational(
                format!("{} N={} round(1000/latency) (ops/s)", r.operator, r.n),
                r.throughput_ops_s,
                reciprocal.round(),
                "reciprocal of the printed two-decimal latency differs by more than 1 ops/s",
            ));
        }
    }

    for r in &data.utilization {
        rows.push(ComparisonRow::identity(
            format!("{} N={} utilization shares sum (%)", r.operator, r.n),
            100.0,
            r.dpu_pct + r.dma_pct + r.shave_pct,
            0.15,
        ));
    }
    let peak_shave = data
        .utilization
        .iter()
        .map(|r| r.shave_pct)
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(ComparisonRow::identity(
        "peak SHAVE share (%)",
        data.claim("retentive_peak_shave_pct")?,
        peak_shave,
        0.5,
    ));

    let label_pct = |op: Operator| -> Result<f64> {
        data.figure_labels
            .iter()
            .find(|l| l.operator == op)
            .map(|l| l.utilization_pct)
            .ok_or_else(|| Error::Dataset {
                table: "figure_labels",
                message: format!("no label for {op}"),
            })
    };
    rows.push(ComparisonRow::identity(
        "toeplitz over causal utilization (x)",
        data.claim("toeplitz_over_causal_utilization")?,
        label_pct(Operator::Toeplitz)? / label_pct(Operator::Causal)?,
        0.05,
    ));

    let cache = |op: Operator| -> Result<f64> {
        data.hw_utilization
            .iter()
            .find(|h| h.operator == op)
            .map(|h| h.cache_pct)
            .ok_or_else(|| Error::Dataset {
                table: "hw_utilization_4096",
                message: format!("no row for {op}"),
            })
    };
    let (ct, cr) = (cache(Operator::Toeplitz)?, cache(Operator::Retentive)?);
    rows.push(ComparisonRow::informational(
        "toeplitz over retentive cache efficiency (x)",
        data.claim("toeplitz_over_retentive_cache_efficiency")?,
        ct / cr,
        "stated ratio does not follow from the tabulated cache efficiencies",
    ));
    rows.push(ComparisonRow::informational(
        "retentive over toeplitz cache misses (x)",
        data.claim("toeplitz_over_retentive_cache_misses")?,
        (100.0 - cr) / (100.0 - ct),
        "stated ratio does not follow from the tabulated cache efficiencies",
    ));

    let d_state = |op: Operator, d: usize| {
        data.d_state_impact
            .iter()
            .find(|r| r.operator == op && r.d_state == d)
            .map(|r| r.latency_ms)
    };
    if let (Some(lo), Some(hi)) = (d_state(Operator::Fourier, 16), d_state(Operator::Fourier, 128)) {
        rows.push(ComparisonRow::informational(
            "fourier latency growth, d_state 16 to 128 (x)",
            data.claim("fourier_d_state_latency_growth_min")?,
            hi / lo,
            "text claims more than the tabulated ratio",
        ));
    }

    for p in &data.perf_summary {
        if let Some(l) = data
            .latency_scaling
            .iter()
            .find(|l| l.operator == p.operator && l.n == p.n)
        {
            if l.latency_ms != p.latency_ms {
                rows.push(ComparisonRow::informational(
                    format!("{} N={} latency, two tables (ms)", p.operator, p.n),
                    l.latency_ms,
                    p.latency_ms,
                    "overlapping cells of the two latency tables disagree",
                ));
            }
        }
    }

    for e in &data.efficiency {
        if let Some(h) = data.hw_utilization.iter().find(|h| h.operator == e.operator) {
            if e.n != h.n && e.stall_pct == h.stall_pct {
                rows.push(ComparisonRow::informational(
                    format!("{} stall at N={} vs N={} (%)", e.operator, e.n, h.n),
                    e.stall_pct,
                    h.stall_pct,
                    "identical stall and cache values reported at two context lengths",
                ));
            }
        }
    }

    Ok(rows)
}

/// Model reproductions: analytic intensities, simulator labels, chunk plan.
pub fn verify_calibrated(
    data: &ReferenceDataset,
    npu: &NpuDescriptor,
    calib: &CalibrationProfile,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();

    for r in &data.intensity {
        let cfg = AttentionConfig::new(r.n, r.d_h).with_precision_bytes(r.precision_bytes);
        let c = cost_descriptor(r.operator, &cfg, Counting::Analytic)?;
        rows.push(ComparisonRow::calibrated(
            format!("{} analytic intensity (Ops/Byte)", r.operator),
            r.intensity,
            c.intensity,
            0.15,
        ));
    }

    let base = AttentionConfig::new(1, crate::operators::DEFAULT_D_H);
    let targets = data.utilization_targets();
    let (results, matched) = label_agreement(calib, &targets, &base)?;
    for (t, r) in targets.iter().zip(&results) {
        let metric = format!("{} N={} bottleneck", t.operator, t.n);
        let shares = format!(
            "{}/{}/{}",
            fmt_sig(r.shares[0]),
            fmt_sig(r.shares[1]),
            fmt_sig(r.shares[2])
        );
        if t.required {
            rows.push(ComparisonRow::check(
                metric,
                MetricClass::Calibrated,
                t.label.to_string(),
                r.bottleneck.to_string(),
                t.label == r.bottleneck,
                format!("simulated DPU/DMA/SHAVE % {shares}"),
            ));
        } else {
            rows.push(ComparisonRow {
                metric,
                class: MetricClass::Informational,
                reference: t.label.to_string(),
                artifact: r.bottleneck.to_string(),
                rel_delta: None,
                verdict: Verdict::Informational,
                note: format!("row not required of the model; simulated % {shares}"),
            });
        }
    }
    let required = targets.iter().filter(|t| t.required).count();
    let needed = required - 1;
    rows.push(ComparisonRow::check(
        "bottleneck labels matched",
        MetricClass::Calibrated,
        format!(">= {needed} of {required}"),
        format!("{matched} of {required}"),
        matched >= needed,
        format!("{} excluded", ANOMALOUS_UTILIZATION_ROWS.len()),
    ));

    let ret = simulate(
        &decompose(Operator::Retentive, &AttentionConfig { n: 8192, ..base })?,
        calib,
    )?;
    rows.push(ComparisonRow::check(
        "retentive N=8192 SHAVE-bound with share > 65%",
        MetricClass::Calibrated,
        "SHAVE > 65",
        format!("{} {}", ret.bottleneck, fmt_sig(ret.share(Component::Shave))),
        ret.bottleneck == Bottleneck::Single(Component::Shave) && ret.share(Component::Shave) > 65.0,
        "",
    ));

    let chunk_cfg =
        AttentionConfig::new(1, crate::operators::DEFAULT_D_H).with_d_state(data.claim("chunk_d_state")? as usize);
    let n_long = 16384;
    let plan = chunk_plan(n_long, &chunk_cfg, npu.scratchpad_bytes)?;
    rows.push(ComparisonRow::identity(
        "chunk size (tokens)",
        data.claim("chunk_tokens")?,
        plan.chunk_tokens as f64,
        0.0,
    ));
    let ratio = monolithic_peak_bytes(n_long, &chunk_cfg) as f64 / plan.peak_bytes as f64;
    rows.push(ComparisonRow::check(
        "monolithic over chunked peak memory at N=16384 (x)",
        MetricClass::Calibrated,
        format!(">= {}", fmt_sig(data.claim("chunk_peak_reduction")?)),
        fmt_sig(ratio),
        ratio >= data.claim("chunk_peak_reduction")?,
        "",
    ));

    let threshold = 768.0 * 1024.0 * 1024.0;
    if let Some(shape) = smallest_kv_cache_above(16384, threshold) {
        rows.push(ComparisonRow {
            metric: "smallest KV cache above 768 MiB at N=16384 (MiB)".into(),
            class: MetricClass::Informational,
            reference: "768".into(),
            artifact: fmt_sig(shape.bytes / 1024.0 / 1024.0),
            rel_delta: None,
            verdict: Verdict::Informational,
            note: format!(
                "layers={} d_model={} kv_fraction={} 16-bit",
                shape.layers, shape.d_model, shape.kv_heads_fraction
            ),
        });
    }

    let lin = |d_state| {
        cost_descriptor(
            Operator::Linear,
            &AttentionConfig::new(4096, crate::operators::DEFAULT_D_H).with_d_state(d_state),
            Counting::Analytic,
        )
        .map(|c| c.ops as f64)
    };
    let (lo, hi) = (lin(16)?, lin(128)?);
    rows.push(ComparisonRow::check(
        "linear ops growth, d_state 16 to 128 (x)",
        MetricClass::Calibrated,
        "7 to 9",
        fmt_sig(hi / lo),
        (7.0..=9.0).contains(&(hi / lo)),
        "ops proportional to d_state",
    ));

    Ok(rows)
}

pub fn run_suite(
    suite: Suite,
    data: &ReferenceDataset,
    npu: &NpuDescriptor,
    calib: &CalibrationProfile,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        rows.extend(verify_reference_identities(data, npu)?);
    }
    if matches!(suite, Suite::Calibrated | Suite::All) {
        rows.extend(verify_calibrated(data, npu, calib)?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_interval_check() {
        assert!(throughput_consistent_with_rounding(0.75, 1330.0));
        assert!(throughput_consistent_with_rounding(1.59, 631.0));
        assert!(throughput_consistent_with_rounding(4.21, 237.0));
        assert!(!throughput_consistent_with_rounding(4.21, 250.0));
    }

    #[test]
    fn identities_all_match_on_embedded_data() {
        let data = ReferenceDataset::embedded().unwrap();
        let rows = verify_reference_identities(&data, &NpuDescriptor::default()).unwrap();
        let failed: Vec<_> = rows.iter().filter(|r| r.failed()).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(
            rows.iter()
                .any(|r| r.metric.starts_with("causal utilization, bound_relative")
                    && r.verdict == Verdict::Informational)
        );
        let bound = rows
            .iter()
            .find(|r| r.metric == "retentive roofline bound (GOP/s)")
            .unwrap();
        assert_eq!(bound.artifact, "160.0");
    }

    #[test]
    fn identity_verdicts() {
        assert_eq!(ComparisonRow::identity("x", 1.0, 1.05, 0.1).verdict, Verdict::Match);
        assert_eq!(ComparisonRow::identity("x", 1.0, 1.2, 0.1).verdict, Verdict::Fail);
        assert_eq!(
            ComparisonRow::calibrated("x", 10.0, 11.0, 0.15).verdict,
            Verdict::WithinTolerance
        );
        assert_eq!(ComparisonRow::calibrated("x", 10.0, 12.0, 0.15).verdict, Verdict::Fail);
    }
}
