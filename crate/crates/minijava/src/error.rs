//! Frontend error types.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unlexable character at byte {position}")]
    UnlexableCharacter { position: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at token {position}: expected {expected}")]
pub struct SyntaxError {
    /// Index of the offending token (== token count when input ended early).
    pub position: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerialError {
    #[error("unbalanced serialized AST at symbol {0}")]
    Unbalanced(usize),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("leaf-slot count and token count disagree: {slots} slots vs {tokens} tokens")]
    ArityMismatch { slots: usize, tokens: usize },
    #[error("non-marker leaf without a bound token")]
    UnboundLeaf,
}
