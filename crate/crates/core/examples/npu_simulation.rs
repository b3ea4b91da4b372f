//! Simulated DPU/DMA/SHAVE time shares under the shipped calibration and the
//! bottleneck transitions over context length.

use causal_roofline::report::format::fmt_sig;
use causal_roofline::sim::{decompose, simulate, sweep_bottlenecks, CalibrationProfile};
use causal_roofline::{AttentionConfig, Operator};

fn main() -> causal_roofline::Result<()> {
    let calib = CalibrationProfile::shipped();
    let ns = [128, 256, 512, 1024, 2048, 4096, 8192];
    let base = AttentionConfig::new(1, 64);
    for op in Operator::ALL {
        println!("{op}");
        for &n in &ns {
            let r = simulate(&decompose(op, &AttentionConfig { n, ..base })?, &calib)?;
            println!(
                "  n={n:<5} DPU {:>6}% DMA {:>6}% SHAVE {:>6}%  {:<10} {} ms",
                fmt_sig(r.shares[0]),
                fmt_sig(r.shares[1]),
                fmt_sig(r.shares[2]),
                r.bottleneck.to_string(),
                fmt_sig(r.total_seconds() * 1e3)
            );
        }
        for (a, b, from, to) in sweep_bottlenecks(op, &ns, &base, &calib)?.transitions() {
            println!("  {from} -> {to} between {a} and {b}");
        }
    }
    Ok(())
}
