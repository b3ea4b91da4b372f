//! Chunk sizes and peak scratchpad memory for chunked prefill.

use causal_roofline::cost::NpuDescriptor;
use causal_roofline::sim::{chunk_plan, monolithic_peak_bytes};
use causal_roofline::AttentionConfig;

fn main() -> causal_roofline::Result<()> {
    let npu = NpuDescriptor::default();
    for d_state in [16, 32, 64] {
        let cfg = AttentionConfig::new(1, 64).with_d_state(d_state);
        for n in [4096u64, 16384, 65536] {
            let plan = chunk_plan(n, &cfg, npu.scratchpad_bytes)?;
            let mono = monolithic_peak_bytes(n, &cfg);
            println!(
                "d_state={d_state:<3} n={n:<6} chunk={:<5} chunks={:<3} peak={} B  monolithic={} B  ratio={:.2}  evicted={} B",
                plan.chunk_tokens,
                plan.n_chunks,
                plan.peak_bytes,
                mono,
                mono as f64 / plan.peak_bytes as f64,
                plan.eviction_bytes
            );
        }
    }
    Ok(())
}
