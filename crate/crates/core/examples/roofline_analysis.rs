//! Analytic arithmetic intensity of each operator placed on the derated
//! roofline.

use causal_roofline::cost::{
    cost_descriptor, critical_intensity, roofline_bound, Counting, NpuDescriptor, RooflinePoint, UtilizationMode,
};
use causal_roofline::report::format::fmt_sig;
use causal_roofline::{AttentionConfig, Operator};

fn main() -> causal_roofline::Result<()> {
    let npu = NpuDescriptor::default();
    println!(
        "effective compute {} GOP/s, bandwidth {} GB/s, critical intensity {}",
        fmt_sig(npu.effective_compute()),
        fmt_sig(npu.effective_bandwidth()),
        fmt_sig(critical_intensity(&npu))
    );
    let cfg = AttentionConfig::new(4096, 64);
    for op in Operator::ALL {
        let c = cost_descriptor(op, &cfg, Counting::Analytic)?;
        let bound = roofline_bound(c.intensity, &npu);
        // a hypothetical kernel reaching a fifth of its bound
        let p = RooflinePoint::new(
            op.name(),
            c.intensity,
            bound / 5.0,
            &npu,
            UtilizationMode::BoundRelative,
        );
        println!(
            "{:<10} I = {:>6} ops/byte  bound {:>6} GOP/s  memory-bound: {}  utilization at bound/5: {}%",
            op.name(),
            fmt_sig(c.intensity),
            fmt_sig(bound),
            c.intensity < critical_intensity(&npu),
            fmt_sig(100.0 * p.utilization)
        );
    }
    Ok(())
}
