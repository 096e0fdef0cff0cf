//! Strict Mini-Java frontend: tokenizer, recursive-descent parser with
//! labeled ASTs (one leaf per token), flat AST serialization with error
//! markers, token reinsertion, unparser, declared-type derivation, and the
//! wrap-and-parse baseline.

pub mod ast;
pub mod error;
pub mod parser;
pub mod restrict;
pub mod serial;
pub mod token;
pub mod types;

pub use ast::{Ast, ErrorMarker, Label};
pub use error::{LexError, SerialError, SyntaxError};
pub use parser::{parse, ParseMode};
pub use restrict::{leaf_span, reparse_fragment, restrict, wrap_and_parse};
pub use serial::{
    deserialize, reinsert_tokens, serialize_ast, serialize_forest, unparse, unparse_tokens,
    SerialSym, SerializedAst,
};
pub use token::{
    abstract_literals, is_keyword, is_modifier, is_primitive_type, is_separator_text,
    must_tokenize, render, tokenize, Token, TokenKind, KEYWORDS, MODIFIERS, SEPARATORS,
};
pub use types::{derive_types, qualify, tag_sequence, TypeBinding, NO_TYPE_TAG, UNKNOWN_TYPE};
