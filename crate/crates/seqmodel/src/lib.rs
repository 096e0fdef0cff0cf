//! Sequence models built from first principles: an encoder-decoder
//! transformer for translation and a decoder-only tagger, with multi-head
//! attention, hand-derived backward passes, Adam/SGD training with the
//! matching learning-rate schedules, greedy and beam decoding over
//! incremental key/value caches, and a byte-exact checkpoint format.

pub mod checkpoint;
pub mod config;
pub mod decode;
pub mod error;
pub mod mat;
pub mod model;
pub mod params;
pub mod scalar;
pub mod train;
pub mod vocab;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainingMeta};
pub use config::{BatchSpec, ModelConfig, ModelMode, Optimizer, Schedule, TrainConfig};
pub use decode::{beam_decode, greedy_decode, tag_topk, Hypothesis};
pub use error::ModelError;
pub use model::{Model, Pair};
pub use scalar::Scalar;
pub use train::{train, LossRecord, TrainOutcome};
pub use vocab::{Vocab, BOS, EOS, PAD, UNK};
