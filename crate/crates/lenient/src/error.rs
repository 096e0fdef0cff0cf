//! Pipeline error types.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LenientError {
    #[error("no qualifying files in corpus")]
    EmptyCorpus,
    #[error(transparent)]
    Lex(minijava::LexError),
    #[error(transparent)]
    Syntax(minijava::SyntaxError),
    #[error(transparent)]
    Serial(minijava::SerialError),
    #[error(transparent)]
    Model(#[from] seqmodel::ModelError),
    #[error("candidate is not valid; repairs cannot be applied")]
    InvalidCandidate,
    #[error("block repair failed: no balanced candidate preserved the skeleton")]
    RepairFailed,
    #[error("abstracted program has {0} symbols (limit 500)")]
    InputTooLong(usize),
    #[error("segment of {0} tokens cannot be split further (limit 100)")]
    SegmentTooLong(usize),
    #[error("fragment tree incompatible with its skeleton slot: {0}")]
    AnchorMismatch(String),
    #[error("not fixable at stage {stage}")]
    NotFixable { stage: &'static str },
    #[error("tag/token length mismatch: {tags} tags vs {tokens} tokens")]
    LengthMismatch { tags: usize, tokens: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
