//! Model and training configuration.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelMode {
    /// Translation: encoder stack + decoder stack with cross attention.
    EncoderDecoder,
    /// Tagging: a single self-attending stack emitting one tag per input
    /// position.
    Tagger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: ModelMode,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.d_model % self.n_heads != 0 {
            return Err(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.n_layers == 0 || self.max_len == 0 || self.src_vocab == 0 || self.tgt_vocab == 0 {
            return Err("zero-sized model dimension".into());
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Learning-rate schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    /// The inverse-square-root warmup schedule:
    /// lr(s) = d_model^-0.5 · min(s^-0.5, s·w^-1.5).
    Noam { warmup: usize },
    /// Fixed initial rate with cosine decay inside each epoch and a warm
    /// restart back to `base_lr` at every epoch boundary; a linear warmup
    /// ramp applies within the first epoch only.
    CosineRestart { base_lr: f64, warmup: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Optimizer {
    /// Adam with the Vaswani betas (0.9, 0.98) and eps 1e-9.
    Adam,
    /// SGD with momentum 0.9 (the warm-restart setting).
    Sgd,
}

/// How examples are grouped into batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BatchSpec {
    /// Fixed number of examples per batch.
    Examples(usize),
    /// Greedy packing up to a target token budget per batch.
    Tokens(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: BatchSpec,
    pub schedule: Schedule,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// Worker fan-out for gradient computation; results are reduced in
    /// example order, so a fixed (seed, jobs) pair is deterministic.
    pub jobs: usize,
    /// Tagger only: positions whose gold tag equals this id contribute zero
    /// loss and zero gradient.
    pub masked_tgt: Option<u32>,
}

impl TrainConfig {
    pub fn translation(seed: u64) -> Self {
        TrainConfig {
            epochs: 10,
            batch: BatchSpec::Examples(64),
            schedule: Schedule::Noam { warmup: 4000 },
            optimizer: Optimizer::Adam,
            seed,
            jobs: 2,
            masked_tgt: None,
        }
    }

    pub fn tagger(seed: u64, masked_tgt: Option<u32>) -> Self {
        TrainConfig {
            epochs: 10,
            batch: BatchSpec::Tokens(4000),
            schedule: Schedule::CosineRestart { base_lr: 0.2, warmup: 1000 },
            optimizer: Optimizer::Sgd,
            seed,
            jobs: 2,
            masked_tgt,
        }
    }
}
