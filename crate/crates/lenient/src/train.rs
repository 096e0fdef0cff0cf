//! Glue between the corpus and the sequence models: profiles, vocabulary
//! construction, pair encoding, and the three training entry points.

use serde::{Deserialize, Serialize};

use seqmodel::{
    train as train_model, BatchSpec, Checkpoint, Model, ModelConfig, ModelMode, Optimizer,
    Schedule, TrainConfig, TrainingMeta, Vocab,
};

use crate::corpus::pairs::TrainPair;
use crate::corpus::vocab::{build_vocab, Side};
use crate::error::LenientError;

/// Hyperparameter profile. `desk` shrinks the model dimensions, not the
/// schedule shape; `paper` carries the full-scale settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub d_model: usize,
    pub d_ff: usize,
    pub n_heads: usize,
    pub translation_layers: usize,
    pub tagger_layers: usize,
    pub dropout: f64,
    pub translation_warmup: usize,
    pub tagger_warmup: usize,
    pub tagger_base_lr: f64,
    pub epochs: usize,
    pub batch_fragments: usize,
    pub batch_tokens: usize,
    pub parser_src_cutoff: usize,
    pub typer_src_cutoff: usize,
    pub typer_tgt_cutoff: usize,
    pub max_len: usize,
}

impl Profile {
    pub fn desk() -> Profile {
        Profile {
            name: "desk".into(),
            d_model: 64,
            d_ff: 256,
            n_heads: 8,
            translation_layers: 2,
            tagger_layers: 6,
            dropout: 0.1,
            // a desk run is only a few thousand steps; the paper-scale 4000
            // would never leave warmup
            translation_warmup: 1000,
            tagger_warmup: 1000,
            tagger_base_lr: 0.2,
            epochs: 10,
            batch_fragments: 64,
            batch_tokens: 4000,
            parser_src_cutoff: 12,
            typer_src_cutoff: 35,
            typer_tgt_cutoff: 50,
            max_len: 512,
        }
    }

    pub fn paper() -> Profile {
        Profile {
            name: "paper".into(),
            d_model: 512,
            d_ff: 2048,
            translation_warmup: 4000,
            ..Profile::desk()
        }
    }

    pub fn by_name(name: &str) -> Result<Profile, LenientError> {
        match name {
            "desk" => Ok(Profile::desk()),
            "paper" => Ok(Profile::paper()),
            other => Err(LenientError::Config(format!("unknown profile `{other}`"))),
        }
    }

    fn translation_model(&self, src_vocab: usize, tgt_vocab: usize) -> ModelConfig {
        ModelConfig {
            mode: ModelMode::EncoderDecoder,
            n_layers: self.translation_layers,
            n_heads: self.n_heads,
            d_model: self.d_model,
            d_ff: self.d_ff,
            dropout: self.dropout,
            max_len: self.max_len,
            src_vocab,
            tgt_vocab,
        }
    }

    fn translation_train(&self, seed: u64, jobs: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch: BatchSpec::Examples(self.batch_fragments),
            schedule: Schedule::Noam { warmup: self.translation_warmup },
            optimizer: Optimizer::Adam,
            seed,
            jobs,
            masked_tgt: None,
        }
    }
}

pub fn encode_pairs(pairs: &[TrainPair], src: &Vocab, tgt: &Vocab) -> Vec<seqmodel::Pair> {
    pairs
        .iter()
        .map(|p| seqmodel::Pair { src: src.encode(&p.src), tgt: tgt.encode(&p.tgt) })
        .collect()
}

pub struct TrainedModel {
    pub checkpoint: Checkpoint<f32>,
    pub history: Vec<seqmodel::LossRecord>,
}

/// Shared encoder-decoder training path (TresParser and BlockFix).
/// `on_epoch` sees the in-progress checkpoint and may stop early.
pub fn train_translation(
    pairs: &[TrainPair],
    profile: &Profile,
    src_cutoff: usize,
    seed: u64,
    jobs: usize,
    mut on_epoch: impl FnMut(&Checkpoint<f32>, usize) -> bool,
) -> Result<TrainedModel, LenientError> {
    let src_vocab = build_vocab(pairs, Side::Src, src_cutoff);
    let tgt_vocab = build_vocab(pairs, Side::Tgt, 1);
    let encoded = encode_pairs(pairs, &src_vocab, &tgt_vocab);
    let cfg = profile.translation_model(src_vocab.len(), tgt_vocab.len());
    let mut model = Model::<f32>::new(cfg, seed)?;
    let tcfg = profile.translation_train(seed, jobs);
    let mut meta = TrainingMeta { epoch: 0, step: 0, final_loss: f64::NAN };
    let outcome = {
        let src_vocab = src_vocab.clone();
        let tgt_vocab = tgt_vocab.clone();
        train_model(&mut model, &encoded, &tcfg, |m, epoch| {
            let view = Checkpoint {
                model: Model::from_arena(m.cfg.clone(), m.arena.clone()).expect("same config"),
                src_vocab: src_vocab.clone(),
                tgt_vocab: tgt_vocab.clone(),
                meta: TrainingMeta { epoch, step: 0, final_loss: f64::NAN },
            };
            on_epoch(&view, epoch)
        })?
    };
    meta.epoch = outcome.epochs_run;
    meta.step = outcome.final_step;
    meta.final_loss = outcome.history.last().map(|r| r.loss).unwrap_or(f64::NAN);
    Ok(TrainedModel {
        checkpoint: Checkpoint { model, src_vocab, tgt_vocab, meta },
        history: outcome.history,
    })
}

/// Tagger training: SGD with per-epoch cosine warm restarts, token-budget
/// batches, and zero loss on no-type positions.
pub fn train_tagger(
    pairs: &[TrainPair],
    profile: &Profile,
    seed: u64,
    jobs: usize,
    mut on_epoch: impl FnMut(&Checkpoint<f32>, usize) -> bool,
) -> Result<TrainedModel, LenientError> {
    let src_vocab = build_vocab(pairs, Side::Src, profile.typer_src_cutoff);
    let tgt_vocab = build_vocab(pairs, Side::Tgt, profile.typer_tgt_cutoff);
    let encoded = encode_pairs(pairs, &src_vocab, &tgt_vocab);
    let no_type = tgt_vocab.id(minijava::NO_TYPE_TAG);
    let cfg = ModelConfig {
        mode: ModelMode::Tagger,
        n_layers: profile.tagger_layers,
        n_heads: profile.n_heads,
        d_model: profile.d_model,
        d_ff: profile.d_ff,
        dropout: profile.dropout,
        max_len: 128.min(profile.max_len),
        src_vocab: src_vocab.len(),
        tgt_vocab: tgt_vocab.len(),
    };
    let mut model = Model::<f32>::new(cfg, seed)?;
    let tcfg = TrainConfig {
        epochs: profile.epochs,
        batch: BatchSpec::Tokens(profile.batch_tokens),
        schedule: Schedule::CosineRestart {
            base_lr: profile.tagger_base_lr,
            warmup: profile.tagger_warmup,
        },
        optimizer: Optimizer::Sgd,
        seed,
        jobs,
        masked_tgt: Some(no_type),
    };
    let outcome = {
        let src_vocab = src_vocab.clone();
        let tgt_vocab = tgt_vocab.clone();
        train_model(&mut model, &encoded, &tcfg, |m, epoch| {
            let view = Checkpoint {
                model: Model::from_arena(m.cfg.clone(), m.arena.clone()).expect("same config"),
                src_vocab: src_vocab.clone(),
                tgt_vocab: tgt_vocab.clone(),
                meta: TrainingMeta { epoch, step: 0, final_loss: f64::NAN },
            };
            on_epoch(&view, epoch)
        })?
    };
    let meta = TrainingMeta {
        epoch: outcome.epochs_run,
        step: outcome.final_step,
        final_loss: outcome.history.last().map(|r| r.loss).unwrap_or(f64::NAN),
    };
    Ok(TrainedModel {
        checkpoint: Checkpoint { model, src_vocab, tgt_vocab, meta },
        history: outcome.history,
    })
}

/// Loss history as CSV (step, lr, loss), with the run config in a comment.
pub fn history_csv(history: &[seqmodel::LossRecord], header: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {header}\n"));
    out.push_str("step,lr,loss\n");
    for r in history {
        out.push_str(&format!("{},{},{}\n", r.step, r.lr, r.loss));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::pairs::PairMeta;

    fn toy_pairs() -> Vec<TrainPair> {
        (0..24)
            .map(|i| TrainPair {
                src: vec!["int".into(), "x".into(), "=".into(), format!("v{}", i % 3)],
                tgt: vec!["(".into(), "SimpleName".into(), ")".into()],
                meta: PairMeta::default(),
            })
            .collect()
    }

    #[test]
    fn translation_training_runs_and_checkpoints() {
        let mut profile = Profile::desk();
        profile.d_model = 16;
        profile.d_ff = 32;
        profile.n_heads = 2;
        profile.epochs = 1;
        profile.max_len = 32;
        let out = train_translation(&toy_pairs(), &profile, 1, 3, 1, |_, _| true).unwrap();
        assert!(out.checkpoint.meta.final_loss.is_finite());
        assert_eq!(out.checkpoint.meta.epoch, 1);
        assert!(out.checkpoint.tgt_vocab.id("SimpleName") >= 4);
    }

    #[test]
    fn early_stop_respected() {
        let mut profile = Profile::desk();
        profile.d_model = 16;
        profile.d_ff = 32;
        profile.n_heads = 2;
        profile.epochs = 5;
        profile.max_len = 32;
        let out = train_translation(&toy_pairs(), &profile, 1, 3, 1, |_, e| e < 2).unwrap();
        assert_eq!(out.checkpoint.meta.epoch, 2);
    }
}
