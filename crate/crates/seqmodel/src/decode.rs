//! Greedy and beam decoding with incremental key/value caches, and per-
//! position top-k for the tagger.

use crate::config::ModelMode;
use crate::error::ModelError;
use crate::mat::{dot, softmax_rows, Mat};
use crate::model::{ff_forward, layer_norm, project, Model};
use crate::scalar::Scalar;
use crate::vocab::{BOS, EOS};

/// One decoded candidate: content symbols (no BOS/EOS) and the summed
/// log-probability of everything the model emitted, EOS included.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<u32>,
    pub score: f64,
    /// False when decoding hit the length cap before emitting EOS.
    pub finished: bool,
}

/// Default translation length cap.
pub fn length_cap(src_len: usize) -> usize {
    4 * src_len + 8
}

struct EncState<T> {
    cross_k: Vec<Mat<T>>,
    cross_v: Vec<Mat<T>>,
}

#[derive(Clone)]
struct KvCache<T> {
    k: Vec<Mat<T>>,
    v: Vec<Mat<T>>,
}

impl<T: Scalar> Model<T> {
    fn encode_src(&self, src: &[u32]) -> EncState<T> {
        let mut none_rng = None;
        let memory = self.encoder_out(src, &mut none_rng);
        let mut cross_k = Vec::with_capacity(self.cfg.n_layers);
        let mut cross_v = Vec::with_capacity(self.cfg.n_layers);
        for l in 0..self.cfg.n_layers {
            let p = self.attn_params(&format!("dec{l}.cross"));
            cross_k.push(project(&memory, p.wk, p.bk));
            cross_v.push(project(&memory, p.wv, p.bv));
        }
        EncState { cross_k, cross_v }
    }

    /// One decoder step at position `pos` (0-based, BOS at pos 0); appends
    /// this position's keys/values to `cache` and returns the next-symbol
    /// probability distribution.
    fn decode_step(&self, enc: &EncState<T>, cache: &mut KvCache<T>, tok: u32, pos: usize) -> Vec<T> {
        let d = self.cfg.d_model;
        let heads = self.cfg.n_heads;
        let d_k = d / heads;
        let scale = T::from_f64(1.0 / (d_k as f64).sqrt());
        let table = self.t("tgt_embed");
        let mut y = embed_one(table.row(tok as usize), pos, d);

        for l in 0..self.cfg.n_layers {
            // self attention over the cached prefix plus this position
            let p = self.attn_params(&format!("dec{l}.self"));
            let q = project(&y, p.wq, p.bq);
            let k_new = project(&y, p.wk, p.bk);
            let v_new = project(&y, p.wv, p.bv);
            append_row(&mut cache.k[l], &k_new);
            append_row(&mut cache.v[l], &v_new);
            let ctx = incremental_attention(&q, &cache.k[l], &cache.v[l], heads, scale);
            let out = project(&ctx, p.wo, p.bo);
            residual_ln(self, &format!("dec{l}.ln1"), &mut y, &out);

            // cross attention over the encoder memory
            let p = self.attn_params(&format!("dec{l}.cross"));
            let q = project(&y, p.wq, p.bq);
            let ctx = incremental_attention(&q, &enc.cross_k[l], &enc.cross_v[l], heads, scale);
            let out = project(&ctx, p.wo, p.bo);
            residual_ln(self, &format!("dec{l}.ln2"), &mut y, &out);

            // feed forward
            let (out, _) = ff_forward(self, &format!("dec{l}.ff"), &y);
            residual_ln(self, &format!("dec{l}.ln3"), &mut y, &out);
        }

        let mut logits = project(&y, self.t("out_proj.w"), self.t("out_proj.b").data);
        softmax_rows(&mut logits);
        logits.data
    }
}

fn embed_one<T: Scalar>(emb_row: &[T], pos: usize, d: usize) -> Mat<T> {
    let scale = T::from_f64((d as f64).sqrt());
    let mut y = Mat::zeros(1, d);
    for i in 0..d / 2 {
        let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
        y.data[2 * i] = T::from_f64(angle.sin());
        y.data[2 * i + 1] = T::from_f64(angle.cos());
    }
    for j in 0..d {
        y.data[j] += emb_row[j] * scale;
    }
    y
}

fn append_row<T: Scalar>(m: &mut Mat<T>, row: &Mat<T>) {
    m.data.extend_from_slice(&row.data);
    m.rows += 1;
}

fn incremental_attention<T: Scalar>(
    q: &Mat<T>,
    k: &Mat<T>,
    v: &Mat<T>,
    heads: usize,
    scale: T,
) -> Mat<T> {
    let d = q.cols;
    let d_k = d / heads;
    let len = k.rows;
    let mut ctx = Mat::zeros(1, d);
    let mut scores = vec![T::ZERO; len];
    for h in 0..heads {
        let qh = &q.data[h * d_k..(h + 1) * d_k];
        for (j, s) in scores.iter_mut().enumerate() {
            *s = dot(qh, &k.row(j)[h * d_k..(h + 1) * d_k]) * scale;
        }
        // softmax over the prefix
        let mut max = scores[0];
        for &s in scores.iter() {
            max = max.max_s(s);
        }
        let mut sum = T::ZERO;
        for s in scores.iter_mut() {
            *s = (*s - max).exp();
            sum += *s;
        }
        let ctx_h = &mut ctx.data[h * d_k..(h + 1) * d_k];
        for (j, s) in scores.iter().enumerate() {
            let w = *s / sum;
            let vh = &v.row(j)[h * d_k..(h + 1) * d_k];
            for (c, &vv) in ctx_h.iter_mut().zip(vh) {
                *c += w * vv;
            }
        }
    }
    ctx
}

fn residual_ln<T: Scalar>(model: &Model<T>, prefix: &str, y: &mut Mat<T>, sub_out: &Mat<T>) {
    for (a, &b) in y.data.iter_mut().zip(&sub_out.data) {
        *a += b;
    }
    let _ = layer_norm(
        y,
        model.t(&format!("{prefix}.gamma")).data,
        model.t(&format!("{prefix}.beta")).data,
    );
}

/// Argmax decoding until EOS or the length cap; tagger mode returns exactly
/// one tag per input position.
pub fn greedy_decode<T: Scalar>(model: &Model<T>, src: &[u32]) -> Result<Vec<u32>, ModelError> {
    match model.cfg.mode {
        ModelMode::Tagger => {
            let dists = model.forward_distributions(src, &[])?;
            Ok(dists.iter().map(|row| argmax(row)).collect())
        }
        ModelMode::EncoderDecoder => {
            let hyps = beam_decode(model, src, 1)?;
            Ok(hyps.into_iter().next().map(|h| h.tokens).unwrap_or_default())
        }
    }
}

/// Standard beam search; results sorted by descending total log-probability.
/// Beam width 1 coincides with greedy decoding.
pub fn beam_decode<T: Scalar>(
    model: &Model<T>,
    src: &[u32],
    k: usize,
) -> Result<Vec<Hypothesis>, ModelError> {
    assert!(k >= 1, "beam width must be at least 1");
    assert!(
        matches!(model.cfg.mode, ModelMode::EncoderDecoder),
        "beam decoding applies to translation models"
    );
    if src.len() > model.cfg.max_len {
        return Err(ModelError::SequenceTooLong { len: src.len(), max_len: model.cfg.max_len });
    }
    let cap = length_cap(src.len()).min(model.cfg.max_len.saturating_sub(1));
    let enc = model.encode_src(src);
    let empty = KvCache {
        k: (0..model.cfg.n_layers).map(|_| Mat::zeros(0, model.cfg.d_model)).collect(),
        v: (0..model.cfg.n_layers).map(|_| Mat::zeros(0, model.cfg.d_model)).collect(),
    };

    struct Beam<T> {
        cache: KvCache<T>,
        tokens: Vec<u32>,
        score: f64,
        last: u32,
    }
    let mut alive = vec![Beam { cache: empty.clone(), tokens: Vec::new(), score: 0.0, last: BOS }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for pos in 0..cap {
        if alive.is_empty() {
            break;
        }
        // Step every alive beam; caches grow in place.
        let mut candidates: Vec<(usize, u32, f64)> = Vec::new();
        for (bi, beam) in alive.iter_mut().enumerate() {
            let dist = model.decode_step(&enc, &mut beam.cache, beam.last, pos);
            for (tok, p) in dist.iter().enumerate() {
                let logp = p.to_f64().max(1e-300).ln();
                candidates.push((bi, tok as u32, beam.score + logp));
            }
        }
        candidates.sort_by(|a, b| {
            b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
        });
        let mut next_alive: Vec<Beam<T>> = Vec::with_capacity(k);
        for &(bi, tok, score) in candidates.iter() {
            if next_alive.len() >= k {
                break;
            }
            if tok == EOS {
                finished.push(Hypothesis {
                    tokens: alive[bi].tokens.clone(),
                    score,
                    finished: true,
                });
                continue;
            }
            if tok == BOS {
                continue;
            }
            let mut tokens = alive[bi].tokens.clone();
            tokens.push(tok);
            next_alive.push(Beam { cache: alive[bi].cache.clone(), tokens, score, last: tok });
        }
        // Prune hopeless beams once we already hold k better finished ones.
        if finished.len() >= k {
            finished.sort_by(|a, b| {
                b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal)
            });
            let kth = finished[k - 1].score;
            next_alive.retain(|b| b.score > kth);
        }
        alive = next_alive;
    }
    for b in alive {
        finished.push(Hypothesis { tokens: b.tokens, score: b.score, finished: false });
    }
    finished.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.tokens.cmp(&b.tokens))
    });
    finished.truncate(k);
    Ok(finished)
}

/// Tagger top-k: per input position, the k most probable tags with their
/// probabilities, descending.
pub fn tag_topk<T: Scalar>(
    model: &Model<T>,
    src: &[u32],
    k: usize,
) -> Result<Vec<Vec<(u32, f64)>>, ModelError> {
    let dists = model.forward_distributions(src, &[])?;
    Ok(dists
        .into_iter()
        .map(|row| {
            let mut ranked: Vec<(u32, f64)> =
                row.iter().enumerate().map(|(i, p)| (i as u32, p.to_f64())).collect();
            ranked.sort_by(|a, b| {
                b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0))
            });
            ranked.truncate(k);
            ranked
        })
        .collect())
}

fn argmax<T: Scalar>(row: &[T]) -> u32 {
    let mut best = 0usize;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best as u32
}
