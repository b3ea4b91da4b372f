//! Causal attention operators on a counting tensor substrate, an analytical
//! roofline model with derated ("effective") hardware ceilings, and a
//! component-time simulator for an NPU with a systolic matrix engine (DPU),
//! vector cores (SHAVE) and a DMA engine.
//!
//! Module map:
//!
//! - [`tensor`]: dense matrices, `matmul`, softmax, DFT, Hadamard products,
//!   all instrumented with an exact [`tensor::OpCounter`].
//! - [`operators`]: full causal, linear, Toeplitz, Fourier and retentive
//!   attention plus the six structured masks.
//! - [`cost`]: Ops/Bytes descriptors, operational intensity, roofline bounds.
//! - [`sim`]: DPU/SHAVE/DMA work decomposition, bottleneck classification,
//!   calibration fitting and chunked-prefill planning.
//! - [`bench`]: context-length sweeps with wall-clock latency and exact counts.
//! - [`report`]: reference measurement tables, identity checks, CSV/PGM/SVG
//!   artifacts and the command-line front end.
//!
//! The `examples/` directory has one runnable program per capability.

pub mod bench;
pub mod config;
pub mod cost;
pub mod error;
pub mod operators;
pub mod report;
pub mod sim;
pub mod tensor;

pub use error::{Error, Result};
pub use operators::{AttentionConfig, MaskKind, Operator};
pub use tensor::{Matrix, OpCounter};
