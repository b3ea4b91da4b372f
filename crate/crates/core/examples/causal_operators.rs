//! Runs the five operators on the same seeded inputs and compares counted
//! work against the closed-form model.

use causal_roofline::cost::{analytic_breakdown, analytic_bytes};
use causal_roofline::operators::random_inputs;
use causal_roofline::{AttentionConfig, OpCounter, Operator};

fn main() -> causal_roofline::Result<()> {
    let cfg = AttentionConfig::new(256, 64).with_d_state(16).with_gamma(0.9);
    let (q, k, v) = random_inputs(&cfg, 7)?;
    println!(
        "n={} d_h={} d_state={} gamma={}",
        cfg.n, cfg.d_h, cfg.d_state, cfg.gamma
    );
    for op in Operator::ALL {
        let mut c = OpCounter::new(cfg.precision_bytes);
        let out = op.run(&q, &k, &v, &cfg, 7, &mut c)?;
        let model = analytic_breakdown(op, &cfg)?;
        println!(
            "{:<10} counted {:>10} ops, model {:>10}, bytes {:>8}, |out|max {:.3}",
            op.name(),
            c.flops(),
            model.total(),
            analytic_bytes(op, &cfg)?,
            out.max_abs()
        );
    }
    Ok(())
}
