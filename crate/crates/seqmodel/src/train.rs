//! Training loop: Adam with the inverse-square-root warmup schedule for
//! translation, SGD with per-epoch cosine warm restarts for the tagger,
//! deterministic chunked gradient reduction, and a loss history.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{BatchSpec, Optimizer, Schedule, TrainConfig};
use crate::error::ModelError;
use crate::model::{Model, Pair};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
}

pub struct TrainOutcome {
    pub history: Vec<LossRecord>,
    pub epochs_run: usize,
    pub final_step: usize,
}

impl Schedule {
    /// Learning rate at 1-based `step`. For the cosine schedule,
    /// `steps_per_epoch` locates the epoch boundaries; the rate returns to
    /// `base_lr` exactly at the start of every epoch after the first.
    pub fn lr(&self, step: usize, d_model: usize, steps_per_epoch: usize) -> f64 {
        match *self {
            Schedule::Noam { warmup } => {
                let s = step.max(1) as f64;
                let w = warmup.max(1) as f64;
                (d_model as f64).powf(-0.5) * (s.powf(-0.5)).min(s * w.powf(-1.5))
            }
            Schedule::CosineRestart { base_lr, warmup } => {
                let t_total = steps_per_epoch.max(1);
                let s0 = step - 1;
                let epoch = s0 / t_total;
                let t = s0 % t_total;
                let ramp = if epoch == 0 {
                    ((t + 1) as f64 / warmup.max(1) as f64).min(1.0)
                } else {
                    1.0
                };
                let cosine = 0.5 * (1.0 + (std::f64::consts::PI * t as f64 / t_total as f64).cos());
                base_lr * ramp * cosine
            }
        }
    }
}

struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: usize,
}

enum OptState<T> {
    Adam(AdamState<T>),
    Sgd { velocity: Vec<T> },
}

fn apply_update<T: Scalar>(
    opt: &mut OptState<T>,
    arena: &mut [T],
    grads: &[T],
    lr: f64,
) {
    match opt {
        OptState::Adam(st) => {
            st.t += 1;
            let b1: f64 = 0.9;
            let b2: f64 = 0.98;
            let eps = T::from_f64(1e-9);
            let b1t = T::from_f64(1.0 - b1.powi(st.t as i32));
            let b2t = T::from_f64(1.0 - b2.powi(st.t as i32));
            let b1 = T::from_f64(b1);
            let b2 = T::from_f64(b2);
            let one = T::ONE;
            let lr = T::from_f64(lr);
            for i in 0..arena.len() {
                let g = grads[i];
                st.m[i] = b1 * st.m[i] + (one - b1) * g;
                st.v[i] = b2 * st.v[i] + (one - b2) * g * g;
                let mhat = st.m[i] / b1t;
                let vhat = st.v[i] / b2t;
                arena[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        OptState::Sgd { velocity } => {
            let mu = T::from_f64(0.9);
            let lr = T::from_f64(lr);
            for i in 0..arena.len() {
                velocity[i] = mu * velocity[i] - lr * grads[i];
                arena[i] += velocity[i];
            }
        }
    }
}

fn make_batches(order: &[usize], pairs: &[Pair], spec: BatchSpec) -> Vec<Vec<usize>> {
    match spec {
        BatchSpec::Examples(n) => order.chunks(n.max(1)).map(|c| c.to_vec()).collect(),
        BatchSpec::Tokens(budget) => {
            let mut batches = Vec::new();
            let mut cur = Vec::new();
            let mut toks = 0usize;
            for &i in order {
                let len = pairs[i].src.len();
                if !cur.is_empty() && toks + len > budget {
                    batches.push(std::mem::take(&mut cur));
                    toks = 0;
                }
                cur.push(i);
                toks += len;
            }
            if !cur.is_empty() {
                batches.push(cur);
            }
            batches
        }
    }
}

/// Trains in place. `on_epoch` runs after each epoch with the live model and
/// the 1-based epoch number; returning `false` stops early.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    pairs: &[Pair],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&Model<T>, usize) -> bool,
) -> Result<TrainOutcome, ModelError> {
    if pairs.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let n_params = model.layout.total;
    let mut opt = match cfg.optimizer {
        Optimizer::Adam => OptState::Adam(AdamState {
            m: vec![T::ZERO; n_params],
            v: vec![T::ZERO; n_params],
            t: 0,
        }),
        Optimizer::Sgd => OptState::Sgd { velocity: vec![T::ZERO; n_params] },
    };

    // Steps per epoch for the cosine restarts, from the first epoch's batching.
    let base_order: Vec<usize> = (0..pairs.len()).collect();
    let steps_per_epoch = make_batches(&base_order, pairs, cfg.batch).len();

    let mut history = Vec::new();
    let mut step = 0usize;
    let jobs = cfg.jobs.max(1);
    let mut grad_bufs: Vec<Vec<T>> = (0..jobs).map(|_| vec![T::ZERO; n_params]).collect();
    let mut grads: Vec<T> = vec![T::ZERO; n_params];
    let mut epochs_run = 0;

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let mut shuffle_rng =
            ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64).wrapping_mul(0x2545f491));
        order.shuffle(&mut shuffle_rng);
        let batches = make_batches(&order, pairs, cfg.batch);

        for batch in &batches {
            step += 1;
            let lr = cfg.schedule.lr(step, model.cfg.d_model, steps_per_epoch);

            // Chunked, order-preserving gradient accumulation: each worker
            // sums its contiguous chunk, then chunks reduce in index order.
            let chunk_size = batch.len().div_ceil(jobs);
            let chunks: Vec<&[usize]> = batch.chunks(chunk_size.max(1)).collect();
            let model_ref: &Model<T> = model;
            let results: Vec<Result<(f64, usize), ModelError>> = chunks
                .par_iter()
                .zip(grad_bufs.par_iter_mut())
                .map(|(chunk, buf)| {
                    buf.iter_mut().for_each(|g| *g = T::ZERO);
                    let mut loss = 0.0;
                    let mut count = 0usize;
                    for &idx in chunk.iter() {
                        let mut rng = Model::<T>::example_rng(cfg.seed, step, idx);
                        let out = model_ref.example_grad(
                            &pairs[idx],
                            cfg.masked_tgt,
                            if model_ref.cfg.dropout > 0.0 { Some(&mut rng) } else { None },
                            buf,
                        )?;
                        loss += out.loss_sum;
                        count += out.positions;
                    }
                    Ok((loss, count))
                })
                .collect();

            let mut loss_sum = 0.0;
            let mut positions = 0usize;
            for r in results {
                let (l, c) = r?;
                loss_sum += l;
                positions += c;
            }
            grads.iter_mut().for_each(|g| *g = T::ZERO);
            for buf in grad_bufs.iter().take(chunks.len()) {
                for (g, &b) in grads.iter_mut().zip(buf) {
                    *g += b;
                }
            }
            if positions > 0 {
                let inv = T::from_f64(1.0 / positions as f64);
                grads.iter_mut().for_each(|g| *g *= inv);
            }
            let loss = if positions > 0 { loss_sum / positions as f64 } else { 0.0 };
            if !loss.is_finite() {
                return Err(ModelError::Divergence { step });
            }
            apply_update(&mut opt, &mut model.arena, &grads, lr);
            history.push(LossRecord { step, lr, loss });
        }
        epochs_run = epoch + 1;
        if !on_epoch(model, epochs_run) {
            break;
        }
    }
    Ok(TrainOutcome { history, epochs_run, final_step: step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ModelConfig, ModelMode};

    fn tiny_cfg() -> ModelConfig {
        ModelConfig {
            mode: ModelMode::EncoderDecoder,
            n_layers: 1,
            n_heads: 2,
            d_model: 16,
            d_ff: 32,
            dropout: 0.0,
            max_len: 16,
            src_vocab: 10,
            tgt_vocab: 10,
        }
    }

    #[test]
    fn noam_schedule_closed_form() {
        let s = Schedule::Noam { warmup: 4000 };
        let d = 512;
        // lr(s) = d^-0.5 · min(s^-0.5, s·w^-1.5); at s = w the two arms meet.
        let at_warmup = s.lr(4000, d, 0);
        let expect = (d as f64).powf(-0.5) * (4000f64).powf(-0.5);
        assert!((at_warmup - expect).abs() < 1e-12);
        let early = s.lr(100, d, 0);
        let expect_early = (d as f64).powf(-0.5) * 100.0 * (4000f64).powf(-1.5);
        assert!((early - expect_early).abs() < 1e-12);
        let late = s.lr(16000, d, 0);
        let expect_late = (d as f64).powf(-0.5) * (16000f64).powf(-0.5);
        assert!((late - expect_late).abs() < 1e-12);
    }

    #[test]
    fn cosine_restart_returns_to_base_at_epoch_boundaries() {
        let s = Schedule::CosineRestart { base_lr: 0.2, warmup: 10 };
        let spe = 100;
        for epoch in 1..5 {
            let boundary_step = epoch * spe + 1;
            assert!((s.lr(boundary_step, 64, spe) - 0.2).abs() < 1e-12, "epoch {epoch}");
        }
        // Warmup ramps within the first epoch.
        assert!(s.lr(1, 64, spe) < 0.2 * 0.11);
        // Decays inside an epoch.
        assert!(s.lr(150, 64, spe) < 0.2);
    }

    #[test]
    fn memorizes_identical_pairs() {
        let mut model = Model::<f32>::new(tiny_cfg(), 7).unwrap();
        let pair = Pair { src: vec![4, 5, 6], tgt: vec![6, 5] };
        let pairs: Vec<Pair> = std::iter::repeat(pair).take(10).collect();
        let tcfg = TrainConfig {
            epochs: 1,
            batch: BatchSpec::Examples(4),
            schedule: Schedule::Noam { warmup: 10 },
            optimizer: Optimizer::Adam,
            seed: 3,
            jobs: 1,
            masked_tgt: None,
        };
        let out = train(&mut model, &pairs, &tcfg, |_, _| true).unwrap();
        let first = out.history.first().unwrap().loss;
        let last = out.history.last().unwrap().loss;
        assert!(last < first, "loss should fall: {first} -> {last}");
    }

    #[test]
    fn fixed_seed_single_worker_reproduces_loss_curve() {
        let mut cfg = tiny_cfg();
        cfg.dropout = 0.1;
        let pairs: Vec<Pair> = (0..12)
            .map(|i| Pair { src: vec![4 + (i % 3), 5, 6], tgt: vec![6, 5 + (i % 2)] })
            .collect();
        let tcfg = TrainConfig {
            epochs: 2,
            batch: BatchSpec::Examples(4),
            schedule: Schedule::Noam { warmup: 10 },
            optimizer: Optimizer::Adam,
            seed: 11,
            jobs: 1,
            masked_tgt: None,
        };
        let mut m1 = Model::<f32>::new(cfg.clone(), 7).unwrap();
        let h1 = train(&mut m1, &pairs, &tcfg, |_, _| true).unwrap().history;
        let mut m2 = Model::<f32>::new(cfg, 7).unwrap();
        let h2 = train(&mut m2, &pairs, &tcfg, |_, _| true).unwrap().history;
        assert_eq!(h1, h2);
        assert_eq!(m1.arena, m2.arena);
    }

    #[test]
    fn divergence_is_reported() {
        let mut model = Model::<f32>::new(tiny_cfg(), 7).unwrap();
        // Blow up the parameters so the softmax saturates and loss goes non-finite.
        model.arena.iter_mut().for_each(|v| *v = 1e30);
        let pairs = vec![Pair { src: vec![4, 5], tgt: vec![6] }];
        let tcfg = TrainConfig {
            epochs: 1,
            batch: BatchSpec::Examples(1),
            schedule: Schedule::Noam { warmup: 10 },
            optimizer: Optimizer::Adam,
            seed: 3,
            jobs: 1,
            masked_tgt: None,
        };
        match train(&mut model, &pairs, &tcfg, |_, _| true) {
            Err(ModelError::Divergence { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|o| o.epochs_run)),
        }
    }

    #[test]
    fn fully_masked_batch_changes_nothing() {
        let mut cfg = tiny_cfg();
        cfg.mode = ModelMode::Tagger;
        let mut model = Model::<f32>::new(cfg, 7).unwrap();
        let before = model.arena.clone();
        let pairs = vec![Pair { src: vec![4, 5, 6], tgt: vec![9, 9, 9] }];
        let tcfg = TrainConfig {
            epochs: 1,
            batch: BatchSpec::Tokens(100),
            schedule: Schedule::CosineRestart { base_lr: 0.2, warmup: 1 },
            optimizer: Optimizer::Sgd,
            seed: 3,
            jobs: 1,
            masked_tgt: Some(9),
        };
        train(&mut model, &pairs, &tcfg, |_, _| true).unwrap();
        assert_eq!(model.arena, before);
    }
}
