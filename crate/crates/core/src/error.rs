use alloc::string::String;

/// Errors raised by class construction, dimension queries, learners and the
/// experiment machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("hypothesis matrix is empty")]
    EmptyMatrix,
    #[error("hypothesis rows have zero instances")]
    ZeroInstances,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} column {column} holds {value}, expected 0 or 1")]
    NonBinaryEntry {
        row: usize,
        column: usize,
        value: u8,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),
    #[error("instance {instance} out of range for a class over {instance_count} instances")]
    InstanceOutOfRange {
        instance: usize,
        instance_count: usize,
    },
    #[error("dimension of empty version space undefined")]
    EmptyVersionSpace,
    #[error("version space emptied: stream is not realizable by the class")]
    NonRealizable,
    #[error("learner {0} needs the true label every round")]
    FeedbackRequired(&'static str),
    #[error("expected advice from {expected} experts, got {found}")]
    AdviceLength { expected: usize, found: usize },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = core::result::Result<T, Error>;
