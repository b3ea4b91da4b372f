//! Reference measurement tables, comparisons against them, artifact writers
//! and the command-line front end.

pub mod artifacts;
pub mod cli;
pub mod compare;
pub mod dataset;
pub mod format;

pub use compare::{
    run_suite, verify_calibrated, verify_reference_identities, ComparisonRow, MetricClass, Suite, Verdict,
};
pub use dataset::ReferenceDataset;
