use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("softmax row {row} is fully masked")]
    DegenerateRow { row: usize },

    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },

    #[error("imaginary residue {residue:e} of a real-input transform exceeds {limit:e}")]
    ImaginaryResidue { residue: f32, limit: f32 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("working set of {required} bytes for a single token exceeds the {capacity}-byte scratchpad")]
    Capacity { required: u64, capacity: u64 },

    #[error("need at least {needed} records with distinct n, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("allocation of {bytes} bytes failed")]
    Allocation { bytes: usize },

    #[error("malformed dataset `{table}`: {message}")]
    Dataset { table: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
