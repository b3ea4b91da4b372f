//! Host latency sweep with log-log scaling fits. Host milliseconds are not
//! accelerator milliseconds; compare slopes, not values.
//!
//! CAUSAL_ROOFLINE_REPS=3 cargo run --release --example latency_sweep

use causal_roofline::bench::{fit_scaling_exponent, repetitions_from_env, run_sweep, ScalingField};
use causal_roofline::report::format::fmt_sig;
use causal_roofline::{AttentionConfig, Operator};

fn main() -> causal_roofline::Result<()> {
    let reps = repetitions_from_env()?;
    let ns = [64, 128, 256, 512, 1024];
    let base = AttentionConfig::new(1, 64);
    for op in Operator::ALL {
        let out = run_sweep(op, &ns, &base, reps, 0)?;
        for r in &out.records {
            println!(
                "{:<10} n={:<5} {:>9} ms {:>12} ops {:>7} GOP/s",
                op.name(),
                r.n,
                fmt_sig(r.latency_ms),
                r.ops,
                fmt_sig(r.derived_gops)
            );
        }
        let (lat, r2) = fit_scaling_exponent(&out.records, ScalingField::Latency)?;
        let (ops, _) = fit_scaling_exponent(&out.records, ScalingField::Ops)?;
        println!(
            "{:<10} latency ~ n^{} (r2 {}), ops ~ n^{}",
            op.name(),
            fmt_sig(lat),
            fmt_sig(r2),
            fmt_sig(ops)
        );
    }
    Ok(())
}
