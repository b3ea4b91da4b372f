//! Context-length sweeps: wall-clock latency on the host plus exact operation
//! counts.
//!
//! Host milliseconds say nothing about accelerator milliseconds; only the
//! scaling shape is comparable. The op counts are exact and deterministic.

use std::io;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::operators::{random_inputs, AttentionConfig, Operator};
use crate::report::format::fmt_sig;
use crate::tensor::OpCounter;

/// Environment variable that pins the repetition count.
pub const REPS_ENV: &str = "CAUSAL_ROOFLINE_REPS";
pub const DEFAULT_REPS: usize = 5;
pub const MIN_REPS: usize = 3;
pub const DESK_SWEEP: [usize; 6] = [128, 256, 512, 1024, 2048, 4096];
pub const CSV_HEADER: [&str; 8] = [
    "operator",
    "n",
    "d_h",
    "d_state",
    "latency_ms",
    "ops",
    "derived_gops",
    "throughput_ops_s",
];

/// Invocations per second for a latency in milliseconds.
pub fn throughput_ops_per_s(latency_ms: f64) -> f64 {
    1000.0 / latency_ms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRecord {
    pub operator: Operator,
    pub n: usize,
    pub d_h: usize,
    pub d_state: usize,
    /// Median over the timed repetitions.
    pub latency_ms: f64,
    pub ops: u64,
    pub derived_gops: f64,
    pub throughput_ops_s: f64,
}

impl BenchRecord {
    pub fn new(operator: Operator, cfg: &AttentionConfig, latency_ms: f64, ops: u64) -> Self {
        Self {
            operator,
            n: cfg.n,
            d_h: cfg.d_h,
            d_state: cfg.d_state,
            latency_ms,
            ops,
            derived_gops: ops as f64 / (latency_ms / 1e3) / 1e9,
            throughput_ops_s: throughput_ops_per_s(latency_ms),
        }
    }

    fn csv_fields(&self) -> [String; 8] {
        [
            self.operator.to_string(),
            self.n.to_string(),
            self.d_h.to_string(),
            self.d_state.to_string(),
            fmt_sig(self.latency_ms),
            self.ops.to_string(),
            fmt_sig(self.derived_gops),
            fmt_sig(self.throughput_ops_s),
        ]
    }
}

/// Records plus the sweep points that could not run.
#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub records: Vec<BenchRecord>,
    pub skipped: Vec<(usize, String)>,
}

/// `CAUSAL_ROOFLINE_REPS` if set and valid, else [`DEFAULT_REPS`].
pub fn repetitions_from_env() -> Result<usize> {
    match std::env::var(REPS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{REPS_ENV} must be an integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_REPS),
    }
}

fn measure(op: Operator, cfg: &AttentionConfig, repetitions: usize, seed: u64) -> Result<BenchRecord> {
    let (q, k, v) = random_inputs(cfg, seed)?;
    let mut counter = OpCounter::new(cfg.precision_bytes);
    op.run(&q, &k, &v, cfg, seed, &mut counter)?;
    let ops = counter.take().flops();

    let mut times = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        let out = op.run(&q, &k, &v, cfg, seed, &mut counter)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(out);
        let run_ops = counter.take().flops();
        if run_ops != ops {
            return Err(Error::InvalidConfig(format!(
                "{op} at n={} counted {run_ops} ops after {ops}",
                cfg.n
            )));
        }
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    // clock resolution floor so throughput stays finite
    Ok(BenchRecord::new(op, cfg, median.max(1e-6), ops))
}

fn run_points(
    op: Operator,
    cfgs: impl IntoIterator<Item = AttentionConfig>,
    repetitions: usize,
    seed: u64,
    key: impl Fn(&AttentionConfig) -> usize,
) -> Result<SweepOutcome> {
    if repetitions < MIN_REPS {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_REPS} repetitions required, got {repetitions}"
        )));
    }
    let mut outcome = SweepOutcome::default();
    for cfg in cfgs {
        match measure(op, &cfg, repetitions, seed) {
            Ok(r) => outcome.records.push(r),
            Err(e @ Error::Allocation { .. }) => outcome.skipped.push((key(&cfg), e.to_string())),
            Err(e) => return Err(e),
        }
    }
    Ok(outcome)
}

/// One record per `n`: one warm-up run, then the median of `repetitions`
/// timed runs. Points whose buffers cannot be allocated are skipped and
/// annotated rather than aborting the sweep.
pub fn run_sweep(
    op: Operator,
    n_values: &[usize],
    base: &AttentionConfig,
    repetitions: usize,
    seed: u64,
) -> Result<SweepOutcome> {
    run_points(
        op,
        n_values.iter().map(|&n| AttentionConfig { n, ..*base }),
        repetitions,
        seed,
        |c| c.n,
    )
}

/// Like [`run_sweep`] with `n` fixed and `d_state` varied. Skipped points are
/// keyed by `d_state`.
pub fn d_state_sweep(
    op: Operator,
    n: usize,
    d_state_values: &[usize],
    base: &AttentionConfig,
    repetitions: usize,
    seed: u64,
) -> Result<SweepOutcome> {
    let cfgs = d_state_values
        .iter()
        .map(|&d_state| AttentionConfig { n, d_state, ..*base });
    run_points(op, cfgs, repetitions, seed, |c| c.d_state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingField {
    Latency,
    Ops,
}

/// Least-squares slope of `ln(field)` against `ln(n)` and its `r^2`.
pub fn fit_scaling_exponent(records: &[BenchRecord], field: ScalingField) -> Result<(f64, f64)> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let y = match field {
                ScalingField::Latency => r.latency_ms,
                ScalingField::Ops => r.ops as f64,
            };
            (r.n as f64, y)
        })
        .collect();
    log_log_fit(&points)
}

/// Slope and `r^2` of `ln(y)` on `ln(x)`; needs four distinct positive `x`.
pub fn log_log_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: xs.len(),
        });
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InvalidConfig("log-log fit needs positive values".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

pub fn write_records_csv<W: io::Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: io::Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let bad = |message: String| Error::Dataset {
        table: "bench",
        message,
    };
    if rdr.headers()?.iter().ne(CSV_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let field = |i: usize| {
            row.get(i)
                .ok_or_else(|| bad(format!("missing column {}", CSV_HEADER[i])))
        };
        let num = |i: usize| -> Result<f64> {
            field(i)?
                .parse()
                .map_err(|_| bad(format!("bad {} `{}`", CSV_HEADER[i], &row[i])))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)?
                .parse()
                .map_err(|_| bad(format!("bad {} `{}`", CSV_HEADER[i], &row[i])))
        };
        out.push(BenchRecord {
            operator: field(0)?.parse()?,
            n: int(1)? as usize,
            d_h: int(2)? as usize,
            d_state: int(3)? as usize,
            latency_ms: num(4)?,
            ops: int(5)?,
            derived_gops: num(6)?,
            throughput_ops_s: num(7)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput_ops_per_s(4.21).round(), 238.0);
        assert_eq!(throughput_ops_per_s(251.41).round(), 4.0);
        let r = BenchRecord::new(Operator::Causal, &AttentionConfig::new(8, 4), 4.21, 10);
        assert!((r.throughput_ops_s * r.latency_ms - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = [128.0, 256.0, 512.0, 1024.0, 2048.0]
            .iter()
            .map(|&n| (n, 3.7 * n * n))
            .collect();
        let (slope, r2) = log_log_fit(&pts).unwrap();
        assert!((slope - 2.0).abs() < 1e-6);
        assert!((r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points() {
        let pts = [(1.0, 1.0), (2.0, 4.0), (4.0, 16.0), (4.0, 16.0)];
        assert!(matches!(
            log_log_fit(&pts),
            Err(Error::InsufficientData { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn sweep_is_deterministic_in_ops() {
        let base = AttentionConfig::new(1, 8).with_d_state(4);
        let a = run_sweep(Operator::Toeplitz, &[8, 16], &base, 3, 1).unwrap();
        let b = run_sweep(Operator::Toeplitz, &[8, 16], &base, 3, 1).unwrap();
        assert_eq!(a.records.len(), 2);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.ops, y.ops);
            assert!(x.latency_ms > 0.0);
        }
        assert!(run_sweep(Operator::Toeplitz, &[8], &base, 2, 1).is_err());
    }

    #[test]
    fn single_d_state_point() {
        let base = AttentionConfig::new(1, 8);
        let out = d_state_sweep(Operator::Linear, 32, &[16], &base, 3, 0).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].d_state, 16);
    }
}
