//! Model errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence of length {len} exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
    #[error("loss became non-finite at step {step}")]
    Divergence { step: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
