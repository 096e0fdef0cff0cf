//! Lenient parsing, typing and repair of malformed Mini-Java: synthetic
//! corpus generation, fragment extraction with golden serialized trees,
//! error seeding, the BlockFix/TresParser/TresTyper models, the full repair
//! pipeline, and the evaluation metrics.

pub mod blockfix;
pub mod config;
pub mod corpus;
pub mod corruptor;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod pipeline;
pub mod train;
pub mod tresparser;
pub mod trestyper;

pub use error::LenientError;

pub use minijava;
pub use seqmodel;
