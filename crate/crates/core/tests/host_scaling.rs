//! Host wall-clock scaling follows the counted-work scaling. Absolute host
//! latencies are not compared with anything.

use causal_roofline::bench::{fit_scaling_exponent, run_sweep, ScalingField};
use causal_roofline::{AttentionConfig, Operator};

#[test]
fn latency_slope_tracks_op_slope() {
    let ns = [128, 256, 512, 1024];
    let base = AttentionConfig::new(1, 32);
    for op in Operator::ALL {
        let out = run_sweep(op, &ns, &base, 3, 0).unwrap();
        assert!(out.skipped.is_empty());
        let (lat, _) = fit_scaling_exponent(&out.records, ScalingField::Latency).unwrap();
        let (ops, r2) = fit_scaling_exponent(&out.records, ScalingField::Ops).unwrap();
        assert!(r2 > 0.99, "{op}");
        assert!((lat - ops).abs() <= 0.35, "{op}: latency slope {lat}, ops slope {ops}");
    }
}
