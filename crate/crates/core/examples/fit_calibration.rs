//! Fits the simulator calibration to the reference utilization table and
//! writes it to `data/calibration.cfg` (or the path given as the first
//! argument).
//!
//! cargo run --release --example fit_calibration [-- out.cfg]

use std::path::PathBuf;

use causal_roofline::report::format::fmt_sig;
use causal_roofline::report::ReferenceDataset;
use causal_roofline::sim::{fit_calibration, label_agreement, FitGrid};
use causal_roofline::{AttentionConfig, Operator};

fn main() -> causal_roofline::Result<()> {
    let data = ReferenceDataset::embedded()?;
    let targets = data.utilization_targets();
    let latencies = data.latency_targets(&[Operator::Fourier, Operator::Retentive]);
    let base = AttentionConfig::new(1, 64);

    let report = fit_calibration(&targets, &latencies, &base, &FitGrid::default())?;
    println!(
        "matched {}/{} required labels, share SSE {}, latency scale {}",
        report.matched,
        report.required,
        fmt_sig(report.share_sse),
        fmt_sig(report.latency_scale)
    );

    let (results, _) = label_agreement(&report.profile, &targets, &base)?;
    for (t, r) in targets.iter().zip(&results) {
        println!(
            "{:<10} {:>5}  sim {:>6} {:>6} {:>6} {:<12} ref {:>5} {:>5} {:>5} {:<12}{}",
            t.operator.name(),
            t.n,
            fmt_sig(r.shares[0]),
            fmt_sig(r.shares[1]),
            fmt_sig(r.shares[2]),
            r.bottleneck.to_string(),
            t.shares[0],
            t.shares[1],
            t.shares[2],
            t.label.to_string(),
            if !t.required {
                "  (not required)"
            } else if r.bottleneck == t.label {
                ""
            } else {
                "  MISMATCH"
            }
        );
    }

    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/calibration.cfg"));
    let text = format!(
        "# fitted by examples/fit_calibration.rs: {}/{} required labels, share SSE {}\n{}",
        report.matched,
        report.required,
        fmt_sig(report.share_sse),
        report.profile.to_config_string()
    );
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}
