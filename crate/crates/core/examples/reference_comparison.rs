//! Recomputes the reference measurements and prints the comparison rows that
//! are not exact matches.

use causal_roofline::cost::NpuDescriptor;
use causal_roofline::report::{run_suite, ReferenceDataset, Suite, Verdict};
use causal_roofline::sim::CalibrationProfile;

fn main() -> causal_roofline::Result<()> {
    let rows = run_suite(
        Suite::All,
        &ReferenceDataset::embedded()?,
        &NpuDescriptor::default(),
        &CalibrationProfile::shipped(),
    )?;
    for r in rows.iter().filter(|r| r.verdict != Verdict::Match) {
        println!(
            "{:<16} {:<12} {}: {} vs {}  {}",
            r.verdict.name(),
            r.class.name(),
            r.metric,
            r.reference,
            r.artifact,
            r.note
        );
    }
    let fails = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
    println!("{} rows, {} failing", rows.len(), fails);
    Ok(())
}
