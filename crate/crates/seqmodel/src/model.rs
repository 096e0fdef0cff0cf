//! The sequence model: scaled dot-product multi-head attention with
//! residuals and post-sublayer layer normalization, position-wise
//! feed-forward layers, sinusoidal positional encoding, and hand-derived
//! backward passes for all of it.
//!
//! Parameters live in one flat arena; gradients are written into an
//! equally-shaped arena through contiguous per-tensor blocks, so the whole
//! backward pass runs without copying weights.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, ModelMode};
use crate::error::ModelError;
use crate::mat::{add_row_bias, gemm, gemm_a_bt, gemm_at_b, softmax_rows, Mat};
use crate::params::{init_arena, view, MatRef, ParamLayout};
use crate::scalar::Scalar;
use crate::vocab::{BOS, EOS};

const LN_EPS: f64 = 1e-6;

pub struct Model<T: Scalar> {
    pub cfg: ModelConfig,
    pub layout: ParamLayout,
    pub arena: Vec<T>,
}

/// One training pair, already id-encoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

impl<T: Scalar> Model<T> {
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        cfg.validate().map_err(ModelError::InvalidConfig)?;
        let layout = ParamLayout::for_config(&cfg);
        let arena = init_arena(&layout, seed);
        Ok(Model { cfg, layout, arena })
    }

    pub fn from_arena(cfg: ModelConfig, arena: Vec<T>) -> Result<Self, ModelError> {
        cfg.validate().map_err(ModelError::InvalidConfig)?;
        let layout = ParamLayout::for_config(&cfg);
        if arena.len() != layout.total {
            return Err(ModelError::CorruptCheckpoint(format!(
                "arena has {} params, config needs {}",
                arena.len(),
                layout.total
            )));
        }
        Ok(Model { cfg, layout, arena })
    }

    pub fn t(&self, name: &str) -> MatRef<'_, T> {
        view(&self.arena, self.layout.find(name))
    }

    fn check_len(&self, len: usize) -> Result<(), ModelError> {
        if len > self.cfg.max_len {
            Err(ModelError::SequenceTooLong { len, max_len: self.cfg.max_len })
        } else {
            Ok(())
        }
    }

    /// Offset range of the four weights + four biases of one attention
    /// block; they are laid out contiguously.
    fn attn_block(&self, prefix: &str) -> std::ops::Range<usize> {
        let d = self.cfg.d_model;
        let start = self.layout.find(&format!("{prefix}.wq")).offset;
        start..start + 4 * d * d + 4 * d
    }

    fn ff_block(&self, prefix: &str) -> std::ops::Range<usize> {
        let d = self.cfg.d_model;
        let d_ff = self.cfg.d_ff;
        let start = self.layout.find(&format!("{prefix}.w1")).offset;
        start..start + 2 * d * d_ff + d_ff + d
    }

    fn ln_block(&self, prefix: &str) -> std::ops::Range<usize> {
        let d = self.cfg.d_model;
        let start = self.layout.find(&format!("{prefix}.gamma")).offset;
        start..start + 2 * d
    }
}

// ---- shared building blocks -------------------------------------------------

pub(crate) fn positional_encoding<T: Scalar>(len: usize, d: usize) -> Mat<T> {
    let mut pe = Mat::zeros(len, d);
    for pos in 0..len {
        for i in 0..d / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe.data[pos * d + 2 * i] = T::from_f64(angle.sin());
            pe.data[pos * d + 2 * i + 1] = T::from_f64(angle.cos());
        }
    }
    pe
}

fn embed<T: Scalar>(table: MatRef<'_, T>, ids: &[u32], d: usize) -> Mat<T> {
    let scale = T::from_f64((d as f64).sqrt());
    let mut x = Mat::zeros(ids.len(), d);
    let pe = positional_encoding::<T>(ids.len(), d);
    for (pos, &id) in ids.iter().enumerate() {
        let erow = table.row(id as usize);
        let xrow = x.row_mut(pos);
        for j in 0..d {
            xrow[j] = erow[j] * scale + pe.data[pos * d + j];
        }
    }
    x
}

struct Dropout<T> {
    mult: Option<Mat<T>>,
}

fn dropout<T: Scalar>(x: &mut Mat<T>, p: f64, rng: &mut Option<&mut ChaCha8Rng>) -> Dropout<T> {
    let Some(rng) = rng.as_deref_mut() else { return Dropout { mult: None } };
    if p <= 0.0 {
        return Dropout { mult: None };
    }
    let keep = T::from_f64(1.0 / (1.0 - p));
    let mut mult = Mat::zeros(x.rows, x.cols);
    for (m, v) in mult.data.iter_mut().zip(x.data.iter_mut()) {
        if rng.gen_range(0.0..1.0) >= p {
            *m = keep;
            *v *= keep;
        } else {
            *v = T::ZERO;
        }
    }
    Dropout { mult: Some(mult) }
}

fn dropout_backward<T: Scalar>(d: &mut Mat<T>, drop: &Dropout<T>) {
    if let Some(mult) = &drop.mult {
        for (g, &m) in d.data.iter_mut().zip(&mult.data) {
            *g *= m;
        }
    }
}

pub(crate) struct LnCache<T> {
    pub(crate) xhat: Mat<T>,
    pub(crate) inv_std: Vec<T>,
}

/// Row-wise layer norm, in place; returns the cache for backward.
pub(crate) fn layer_norm<T: Scalar>(x: &mut Mat<T>, gamma: &[T], beta: &[T]) -> LnCache<T> {
    let d = x.cols;
    let inv_d = T::from_f64(1.0 / d as f64);
    let mut xhat = Mat::zeros(x.rows, d);
    let mut inv_std = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row_mut(r);
        let mut mean = T::ZERO;
        for &v in row.iter() {
            mean += v;
        }
        mean *= inv_d;
        let mut var = T::ZERO;
        for &v in row.iter() {
            let c = v - mean;
            var += c * c;
        }
        var *= inv_d;
        let istd = T::ONE / (var + T::from_f64(LN_EPS)).sqrt();
        inv_std.push(istd);
        let hrow = xhat.row_mut(r);
        for j in 0..d {
            let h = (row[j] - mean) * istd;
            hrow[j] = h;
            row[j] = gamma[j] * h + beta[j];
        }
    }
    LnCache { xhat, inv_std }
}

/// dx from dy; accumulates dgamma/dbeta into the contiguous ln block.
fn layer_norm_backward<T: Scalar>(
    dy: &Mat<T>,
    cache: &LnCache<T>,
    gamma: &[T],
    ln_grad_block: &mut [T],
) -> Mat<T> {
    let d = dy.cols;
    let (dgamma, dbeta) = ln_grad_block.split_at_mut(d);
    let inv_d = T::from_f64(1.0 / d as f64);
    let mut dx = Mat::zeros(dy.rows, d);
    for r in 0..dy.rows {
        let dyrow = dy.row(r);
        let hrow = cache.xhat.row(r);
        let istd = cache.inv_std[r];
        let mut sum_g = T::ZERO;
        let mut sum_gh = T::ZERO;
        for j in 0..d {
            let g = dyrow[j] * gamma[j];
            sum_g += g;
            sum_gh += g * hrow[j];
            dgamma[j] += dyrow[j] * hrow[j];
            dbeta[j] += dyrow[j];
        }
        sum_g *= inv_d;
        sum_gh *= inv_d;
        let dxrow = dx.row_mut(r);
        for j in 0..d {
            let g = dyrow[j] * gamma[j];
            dxrow[j] = istd * (g - sum_g - hrow[j] * sum_gh);
        }
    }
    dx
}

pub(crate) struct AttnParams<'a, T> {
    pub(crate) wq: MatRef<'a, T>,
    pub(crate) wk: MatRef<'a, T>,
    pub(crate) wv: MatRef<'a, T>,
    pub(crate) wo: MatRef<'a, T>,
    pub(crate) bq: &'a [T],
    pub(crate) bk: &'a [T],
    pub(crate) bv: &'a [T],
    pub(crate) bo: &'a [T],
}

impl<T: Scalar> Model<T> {
    pub(crate) fn attn_params(&self, prefix: &str) -> AttnParams<'_, T> {
        AttnParams {
            wq: self.t(&format!("{prefix}.wq")),
            wk: self.t(&format!("{prefix}.wk")),
            wv: self.t(&format!("{prefix}.wv")),
            wo: self.t(&format!("{prefix}.wo")),
            bq: self.t(&format!("{prefix}.bq")).data,
            bk: self.t(&format!("{prefix}.bk")).data,
            bv: self.t(&format!("{prefix}.bv")).data,
            bo: self.t(&format!("{prefix}.bo")).data,
        }
    }
}

struct AttnGrads<'a, T> {
    dwq: &'a mut [T],
    dwk: &'a mut [T],
    dwv: &'a mut [T],
    dwo: &'a mut [T],
    dbq: &'a mut [T],
    dbk: &'a mut [T],
    dbv: &'a mut [T],
    dbo: &'a mut [T],
}

fn split_attn_block<T>(block: &mut [T], d: usize) -> AttnGrads<'_, T> {
    let (dwq, rest) = block.split_at_mut(d * d);
    let (dwk, rest) = rest.split_at_mut(d * d);
    let (dwv, rest) = rest.split_at_mut(d * d);
    let (dwo, rest) = rest.split_at_mut(d * d);
    let (dbq, rest) = rest.split_at_mut(d);
    let (dbk, rest) = rest.split_at_mut(d);
    let (dbv, dbo) = rest.split_at_mut(d);
    AttnGrads { dwq, dwk, dwv, dwo, dbq, dbk, dbv, dbo }
}

struct AttnCache<T> {
    q: Mat<T>,
    k: Mat<T>,
    v: Mat<T>,
    /// Per-head post-softmax attention weights [Lq, Lk]; causal rows are
    /// zero beyond the diagonal.
    p: Vec<Mat<T>>,
    /// Concatenated per-head context [Lq, d].
    ctx: Mat<T>,
}

pub(crate) fn project<T: Scalar>(x: &Mat<T>, w: MatRef<'_, T>, b: &[T]) -> Mat<T> {
    let mut out = Mat::zeros(x.rows, w.cols);
    gemm(&x.data, x.rows, x.cols, w.data, w.cols, &mut out.data, false);
    add_row_bias(&mut out, b);
    out
}

/// dproj flows back through `proj = x·W + b`: accumulates dW, db, and dx.
fn project_backward<T: Scalar>(
    d_proj: &Mat<T>,
    x: &Mat<T>,
    w: MatRef<'_, T>,
    dw: &mut [T],
    db: &mut [T],
    dx: &mut Mat<T>,
) {
    gemm_a_bt(&d_proj.data, d_proj.rows, d_proj.cols, w.data, w.rows, &mut dx.data, true);
    gemm_at_b(&x.data, x.rows, x.cols, &d_proj.data, d_proj.cols, dw);
    col_sum_into(d_proj, db);
}

pub(crate) fn copy_head<T: Scalar>(full: &Mat<T>, head: usize, d_k: usize) -> Mat<T> {
    let mut out = Mat::zeros(full.rows, d_k);
    for r in 0..full.rows {
        let src = &full.row(r)[head * d_k..(head + 1) * d_k];
        out.row_mut(r).copy_from_slice(src);
    }
    out
}

pub(crate) fn add_head<T: Scalar>(full: &mut Mat<T>, head: usize, d_k: usize, part: &Mat<T>) {
    for r in 0..part.rows {
        let dst = &mut full.row_mut(r)[head * d_k..(head + 1) * d_k];
        for (d, &s) in dst.iter_mut().zip(part.row(r)) {
            *d += s;
        }
    }
}

fn attention_forward<T: Scalar>(
    params: &AttnParams<'_, T>,
    x_q: &Mat<T>,
    x_kv: &Mat<T>,
    n_heads: usize,
    causal: bool,
) -> (Mat<T>, AttnCache<T>) {
    let d = x_q.cols;
    let d_k = d / n_heads;
    let scale = T::from_f64(1.0 / (d_k as f64).sqrt());
    let q = project(x_q, params.wq, params.bq);
    let k = project(x_kv, params.wk, params.bk);
    let v = project(x_kv, params.wv, params.bv);
    let l_q = q.rows;
    let l_k = k.rows;
    let mut ctx = Mat::zeros(l_q, d);
    let mut p_heads = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = copy_head(&q, h, d_k);
        let kh = copy_head(&k, h, d_k);
        let vh = copy_head(&v, h, d_k);
        // Scores as qh · khᵀ with wide contiguous rows, then a prefix-limited
        // softmax; masked-out columns are zeroed so the context multiply and
        // the backward pass can run over full rows.
        let kht = kh.transpose();
        let mut p = Mat::zeros(l_q, l_k);
        gemm(&qh.data, l_q, d_k, &kht.data, l_k, &mut p.data, false);
        for i in 0..l_q {
            let limit = if causal { (i + 1).min(l_k) } else { l_k };
            let row = p.row_mut(i);
            for s in row[..limit].iter_mut() {
                *s *= scale;
            }
            crate::mat::softmax_slice(&mut row[..limit]);
            for s in row[limit..].iter_mut() {
                *s = T::ZERO;
            }
        }
        // ctxᵀ = vhᵀ·pᵀ keeps the inner gemm rows wide (d_k is narrow).
        let vht = vh.transpose();
        let pt = p.transpose();
        let mut cht = Mat::zeros(d_k, l_q);
        gemm(&vht.data, d_k, l_k, &pt.data, l_q, &mut cht.data, false);
        add_head(&mut ctx, h, d_k, &cht.transpose());
        p_heads.push(p);
    }
    let out = project(&ctx, params.wo, params.bo);
    (out, AttnCache { q, k, v, p: p_heads, ctx })
}

#[allow(clippy::too_many_arguments)]
fn attention_backward<T: Scalar>(
    d_out: &Mat<T>,
    cache: &AttnCache<T>,
    params: &AttnParams<'_, T>,
    x_q: &Mat<T>,
    x_kv: &Mat<T>,
    n_heads: usize,
    attn_grad_block: &mut [T],
    d_xq: &mut Mat<T>,
    d_xkv: &mut Mat<T>,
) {
    let d = x_q.cols;
    let d_k = d / n_heads;
    let scale = T::from_f64(1.0 / (d_k as f64).sqrt());
    let grads = split_attn_block(attn_grad_block, d);
    let l_q = cache.q.rows;
    let l_k = cache.k.rows;

    // out = ctx · Wo + bo
    let mut d_ctx = Mat::zeros(l_q, d);
    gemm_a_bt(&d_out.data, l_q, d, params.wo.data, d, &mut d_ctx.data, false);
    gemm_at_b(&cache.ctx.data, l_q, d, &d_out.data, d, grads.dwo);
    col_sum_into(d_out, grads.dbo);

    let mut d_q = Mat::zeros(l_q, d);
    let mut d_k_full = Mat::zeros(l_k, d);
    let mut d_v = Mat::zeros(l_k, d);
    for h in 0..n_heads {
        let qh = copy_head(&cache.q, h, d_k);
        let kh = copy_head(&cache.k, h, d_k);
        let vh = copy_head(&cache.v, h, d_k);
        let dch = copy_head(&d_ctx, h, d_k);
        let p = &cache.p[h];

        // dP = dCh · Vhᵀ over full rows (masked columns of P are zero, so
        // their dS contributions vanish in the softmax backward). All the
        // narrow-width products run transposed so gemm rows stay wide.
        let vht = vh.transpose();
        let mut ds = Mat::zeros(l_q, l_k);
        gemm(&dch.data, l_q, d_k, &vht.data, l_k, &mut ds.data, false);
        for i in 0..l_q {
            let prow = p.row(i);
            let dsrow = ds.row_mut(i);
            let mut inner = T::ZERO;
            for j in 0..l_k {
                inner += dsrow[j] * prow[j];
            }
            for j in 0..l_k {
                dsrow[j] = (dsrow[j] - inner) * prow[j] * scale;
            }
        }
        // dQhᵀ = Khᵀ·dSᵀ
        let kht = kh.transpose();
        let dst = ds.transpose();
        let mut dqht = Mat::zeros(d_k, l_q);
        gemm(&kht.data, d_k, l_k, &dst.data, l_q, &mut dqht.data, false);
        // dKhᵀ = Qhᵀ·dS
        let qht = qh.transpose();
        let mut dkht = Mat::zeros(d_k, l_k);
        gemm(&qht.data, d_k, l_q, &ds.data, l_k, &mut dkht.data, false);
        // dVhᵀ = dChᵀ·P
        let dcht = dch.transpose();
        let mut dvht = Mat::zeros(d_k, l_k);
        gemm(&dcht.data, d_k, l_q, &p.data, l_k, &mut dvht.data, false);
        add_head(&mut d_q, h, d_k, &dqht.transpose());
        add_head(&mut d_k_full, h, d_k, &dkht.transpose());
        add_head(&mut d_v, h, d_k, &dvht.transpose());
    }

    project_backward(&d_q, x_q, params.wq, grads.dwq, grads.dbq, d_xq);
    project_backward(&d_k_full, x_kv, params.wk, grads.dwk, grads.dbk, d_xkv);
    project_backward(&d_v, x_kv, params.wv, grads.dwv, grads.dbv, d_xkv);
}

fn col_sum_into<T: Scalar>(m: &Mat<T>, out: &mut [T]) {
    for r in 0..m.rows {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
}

pub(crate) struct FfCache<T> {
    /// Post-ReLU hidden activations [L, d_ff].
    pub(crate) h: Mat<T>,
}

pub(crate) fn ff_forward<T: Scalar>(
    model: &Model<T>,
    prefix: &str,
    x: &Mat<T>,
) -> (Mat<T>, FfCache<T>) {
    let mut h = project(x, model.t(&format!("{prefix}.w1")), model.t(&format!("{prefix}.b1")).data);
    for v in h.data.iter_mut() {
        if *v < T::ZERO {
            *v = T::ZERO;
        }
    }
    let out = project(&h, model.t(&format!("{prefix}.w2")), model.t(&format!("{prefix}.b2")).data);
    (out, FfCache { h })
}

fn ff_backward<T: Scalar>(
    model: &Model<T>,
    prefix: &str,
    d_out: &Mat<T>,
    cache: &FfCache<T>,
    x: &Mat<T>,
    ff_grad_block: &mut [T],
    dx: &mut Mat<T>,
) {
    let d = model.cfg.d_model;
    let d_ff = model.cfg.d_ff;
    let (dw1, rest) = ff_grad_block.split_at_mut(d * d_ff);
    let (db1, rest) = rest.split_at_mut(d_ff);
    let (dw2, db2) = rest.split_at_mut(d_ff * d);

    let w2 = model.t(&format!("{prefix}.w2"));
    let mut dh = Mat::zeros(cache.h.rows, d_ff);
    gemm_a_bt(&d_out.data, d_out.rows, d, w2.data, d_ff, &mut dh.data, false);
    for (g, &h) in dh.data.iter_mut().zip(&cache.h.data) {
        if h <= T::ZERO {
            *g = T::ZERO;
        }
    }
    gemm_at_b(&cache.h.data, cache.h.rows, d_ff, &d_out.data, d, dw2);
    col_sum_into(d_out, db2);

    let w1 = model.t(&format!("{prefix}.w1"));
    gemm_a_bt(&dh.data, dh.rows, d_ff, w1.data, d, &mut dx.data, true);
    gemm_at_b(&x.data, x.rows, d, &dh.data, d_ff, dw1);
    col_sum_into(&dh, db1);
}

// ---- full stacks ------------------------------------------------------------

struct SublayerCache<T> {
    attn: Option<AttnCache<T>>,
    ff: Option<FfCache<T>>,
    drop: Dropout<T>,
    ln: LnCache<T>,
    /// Input to the sublayer (pre-residual).
    x_in: Mat<T>,
}

struct StackCache<T> {
    ids: Vec<u32>,
    emb_drop: Dropout<T>,
    sublayers: Vec<SublayerCache<T>>,
    out: Mat<T>,
}

#[derive(Clone, Copy, PartialEq)]
enum StackKind {
    Encoder,
    Decoder,
    Tagger,
}

impl StackKind {
    fn prefix(&self, layer: usize) -> String {
        match self {
            StackKind::Encoder => format!("enc{layer}"),
            StackKind::Decoder => format!("dec{layer}"),
            StackKind::Tagger => format!("lay{layer}"),
        }
    }
}

impl<T: Scalar> Model<T> {
    fn run_stack(
        &self,
        kind: StackKind,
        ids: &[u32],
        embed_table: &str,
        memory: Option<&Mat<T>>,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> StackCache<T> {
        let causal = kind == StackKind::Decoder;
        let mut x = embed(self.t(embed_table), ids, self.cfg.d_model);
        let emb_drop = dropout(&mut x, self.cfg.dropout, rng);
        let mut sublayers = Vec::new();
        for l in 0..self.cfg.n_layers {
            let p = kind.prefix(l);
            let attn_name =
                if kind == StackKind::Decoder { format!("{p}.self") } else { format!("{p}.attn") };
            let params = self.attn_params(&attn_name);
            let (mut sub_out, attn_cache) =
                attention_forward(&params, &x, &x, self.cfg.n_heads, causal);
            let drop = dropout(&mut sub_out, self.cfg.dropout, rng);
            let x_in = std::mem::replace(&mut x, sub_out);
            for (xv, &s) in x.data.iter_mut().zip(&x_in.data) {
                *xv += s;
            }
            let ln = layer_norm(
                &mut x,
                self.t(&format!("{p}.ln1.gamma")).data,
                self.t(&format!("{p}.ln1.beta")).data,
            );
            sublayers.push(SublayerCache { attn: Some(attn_cache), ff: None, drop, ln, x_in });

            if kind == StackKind::Decoder {
                let mem = memory.expect("decoder needs encoder memory");
                let params = self.attn_params(&format!("{p}.cross"));
                let (mut sub_out, attn_cache) =
                    attention_forward(&params, &x, mem, self.cfg.n_heads, false);
                let drop = dropout(&mut sub_out, self.cfg.dropout, rng);
                let x_in = std::mem::replace(&mut x, sub_out);
                for (xv, &s) in x.data.iter_mut().zip(&x_in.data) {
                    *xv += s;
                }
                let ln = layer_norm(
                    &mut x,
                    self.t(&format!("{p}.ln2.gamma")).data,
                    self.t(&format!("{p}.ln2.beta")).data,
                );
                sublayers.push(SublayerCache { attn: Some(attn_cache), ff: None, drop, ln, x_in });
            }

            let ln_ff =
                if kind == StackKind::Decoder { format!("{p}.ln3") } else { format!("{p}.ln2") };
            let (mut sub_out, ff_cache) = ff_forward(self, &format!("{p}.ff"), &x);
            let drop = dropout(&mut sub_out, self.cfg.dropout, rng);
            let x_in = std::mem::replace(&mut x, sub_out);
            for (xv, &s) in x.data.iter_mut().zip(&x_in.data) {
                *xv += s;
            }
            let ln = layer_norm(
                &mut x,
                self.t(&format!("{ln_ff}.gamma")).data,
                self.t(&format!("{ln_ff}.beta")).data,
            );
            sublayers.push(SublayerCache { attn: None, ff: Some(ff_cache), drop, ln, x_in });
        }
        StackCache { ids: ids.to_vec(), emb_drop, sublayers, out: x }
    }

    /// Backward through a stack; returns the gradient w.r.t. the
    /// cross-attention memory (decoder only).
    fn backward_stack(
        &self,
        kind: StackKind,
        cache: &StackCache<T>,
        memory: Option<&Mat<T>>,
        mut d_out: Mat<T>,
        grads: &mut [T],
        embed_table: &str,
    ) -> Option<Mat<T>> {
        let d = self.cfg.d_model;
        let mut d_memory = memory.map(|m| Mat::zeros(m.rows, m.cols));
        let per_layer = if kind == StackKind::Decoder { 3 } else { 2 };
        for l in (0..self.cfg.n_layers).rev() {
            let p = kind.prefix(l);
            let base = l * per_layer;

            // feed-forward sublayer
            let ln_ff =
                if kind == StackKind::Decoder { format!("{p}.ln3") } else { format!("{p}.ln2") };
            let sub = &cache.sublayers[base + per_layer - 1];
            let gamma = self.t(&format!("{ln_ff}.gamma")).data.to_vec();
            let mut d_sum =
                layer_norm_backward(&d_out, &sub.ln, &gamma, &mut grads[self.ln_block(&ln_ff)]);
            let mut d_sub = d_sum.clone();
            dropout_backward(&mut d_sub, &sub.drop);
            ff_backward(
                self,
                &format!("{p}.ff"),
                &d_sub,
                sub.ff.as_ref().expect("ff cache"),
                &sub.x_in,
                &mut grads[self.ff_block(&format!("{p}.ff"))],
                &mut d_sum,
            );
            d_out = d_sum;

            // cross-attention sublayer (decoder)
            if kind == StackKind::Decoder {
                let sub = &cache.sublayers[base + 1];
                let gamma = self.t(&format!("{p}.ln2.gamma")).data.to_vec();
                let mut d_sum = layer_norm_backward(
                    &d_out,
                    &sub.ln,
                    &gamma,
                    &mut grads[self.ln_block(&format!("{p}.ln2"))],
                );
                let mut d_sub = d_sum.clone();
                dropout_backward(&mut d_sub, &sub.drop);
                let params = self.attn_params(&format!("{p}.cross"));
                attention_backward(
                    &d_sub,
                    sub.attn.as_ref().expect("attn cache"),
                    &params,
                    &sub.x_in,
                    memory.expect("decoder needs memory"),
                    self.cfg.n_heads,
                    &mut grads[self.attn_block(&format!("{p}.cross"))],
                    &mut d_sum,
                    d_memory.as_mut().expect("memory grad"),
                );
                d_out = d_sum;
            }

            // self-attention sublayer
            let sub = &cache.sublayers[base];
            let attn_name =
                if kind == StackKind::Decoder { format!("{p}.self") } else { format!("{p}.attn") };
            let gamma = self.t(&format!("{p}.ln1.gamma")).data.to_vec();
            let mut d_sum = layer_norm_backward(
                &d_out,
                &sub.ln,
                &gamma,
                &mut grads[self.ln_block(&format!("{p}.ln1"))],
            );
            let mut d_sub = d_sum.clone();
            dropout_backward(&mut d_sub, &sub.drop);
            let params = self.attn_params(&attn_name);
            let mut d_x = Mat::zeros(d_sum.rows, d);
            attention_backward(
                &d_sub,
                sub.attn.as_ref().expect("attn cache"),
                &params,
                &sub.x_in,
                &sub.x_in,
                self.cfg.n_heads,
                &mut grads[self.attn_block(&attn_name)],
                &mut d_x,
                &mut d_sum,
            );
            // query path + kv path + the residual skip
            for (a, &b) in d_sum.data.iter_mut().zip(&d_x.data) {
                *a += b;
            }
            d_out = d_sum;
        }

        // embedding backward
        let mut d_x0 = d_out;
        dropout_backward(&mut d_x0, &cache.emb_drop);
        let scale = T::from_f64((d as f64).sqrt());
        let spec = self.layout.find(embed_table);
        for (pos, &id) in cache.ids.iter().enumerate() {
            let grow =
                &mut grads[spec.offset + id as usize * d..spec.offset + (id as usize + 1) * d];
            for (g, &v) in grow.iter_mut().zip(d_x0.row(pos)) {
                *g += v * scale;
            }
        }
        d_memory
    }

    /// Encoder output (the cross-attention memory).
    pub(crate) fn encoder_out(&self, src: &[u32], rng: &mut Option<&mut ChaCha8Rng>) -> Mat<T> {
        self.run_stack(StackKind::Encoder, src, "src_embed", None, rng).out
    }
}

// ---- losses ------------------------------------------------------------------

pub struct ExampleLoss {
    pub loss_sum: f64,
    pub positions: usize,
}

impl<T: Scalar> Model<T> {
    /// Per-position output distributions for `forward`: encoder-decoder mode
    /// emits |tgt_prefix|+1 next-symbol distributions (a BOS is prepended);
    /// tagger mode emits exactly |src| tag distributions. Dropout disabled.
    pub fn forward_distributions(
        &self,
        src: &[u32],
        tgt_prefix: &[u32],
    ) -> Result<Vec<Vec<T>>, ModelError> {
        self.check_len(src.len())?;
        let mut none_rng: Option<&mut ChaCha8Rng> = None;
        let out = match self.cfg.mode {
            ModelMode::EncoderDecoder => {
                self.check_len(tgt_prefix.len() + 1)?;
                let enc = self.run_stack(StackKind::Encoder, src, "src_embed", None, &mut none_rng);
                let mut dec_in = Vec::with_capacity(tgt_prefix.len() + 1);
                dec_in.push(BOS);
                dec_in.extend_from_slice(tgt_prefix);
                self.run_stack(StackKind::Decoder, &dec_in, "tgt_embed", Some(&enc.out), &mut none_rng)
                    .out
            }
            ModelMode::Tagger => {
                self.run_stack(StackKind::Tagger, src, "src_embed", None, &mut none_rng).out
            }
        };
        let mut logits = project(&out, self.t("out_proj.w"), self.t("out_proj.b").data);
        softmax_rows(&mut logits);
        Ok((0..logits.rows).map(|r| logits.row(r).to_vec()).collect())
    }

    /// Teacher-forced loss and gradient accumulation for one pair — the
    /// training entry point. The decoder input is BOS-shifted; gold is
    /// `tgt ++ EOS`. The tagger aligns gold position-by-position and skips
    /// `masked_tgt` positions entirely.
    pub fn example_grad(
        &self,
        pair: &Pair,
        masked_tgt: Option<u32>,
        rng: Option<&mut ChaCha8Rng>,
        grads: &mut [T],
    ) -> Result<ExampleLoss, ModelError> {
        self.example_loss_inner(pair, masked_tgt, rng, Some(grads))
    }

    pub fn example_eval_loss(
        &self,
        pair: &Pair,
        masked_tgt: Option<u32>,
    ) -> Result<ExampleLoss, ModelError> {
        self.example_loss_inner(pair, masked_tgt, None, None)
    }

    fn example_loss_inner(
        &self,
        pair: &Pair,
        masked_tgt: Option<u32>,
        mut rng: Option<&mut ChaCha8Rng>,
        mut grads: Option<&mut [T]>,
    ) -> Result<ExampleLoss, ModelError> {
        self.check_len(pair.src.len())?;
        let (enc, final_stack, gold) = match self.cfg.mode {
            ModelMode::EncoderDecoder => {
                self.check_len(pair.tgt.len() + 1)?;
                let enc = self.run_stack(StackKind::Encoder, &pair.src, "src_embed", None, &mut rng);
                let mut dec_in = Vec::with_capacity(pair.tgt.len() + 1);
                dec_in.push(BOS);
                dec_in.extend_from_slice(&pair.tgt);
                let dec = self.run_stack(
                    StackKind::Decoder,
                    &dec_in,
                    "tgt_embed",
                    Some(&enc.out),
                    &mut rng,
                );
                let mut gold = pair.tgt.clone();
                gold.push(EOS);
                (Some(enc), dec, gold)
            }
            ModelMode::Tagger => {
                let stack = self.run_stack(StackKind::Tagger, &pair.src, "src_embed", None, &mut rng);
                (None, stack, pair.tgt.clone())
            }
        };

        let w = self.t("out_proj.w");
        let mut probs = project(&final_stack.out, w, self.t("out_proj.b").data);
        softmax_rows(&mut probs);
        let mut loss_sum = 0.0;
        let mut positions = 0;
        let mut d_logits: Option<Mat<T>> =
            grads.as_ref().map(|_| Mat::zeros(probs.rows, probs.cols));
        for (pos, &g) in gold.iter().enumerate() {
            if masked_tgt == Some(g) {
                continue;
            }
            positions += 1;
            let p = probs.data[pos * probs.cols + g as usize];
            // No clamp: a zero or non-finite probability must surface as a
            // non-finite loss so training reports Divergence.
            loss_sum += -p.to_f64().ln();
            if let Some(dl) = d_logits.as_mut() {
                let drow = dl.row_mut(pos);
                drow.copy_from_slice(probs.row(pos));
                drow[g as usize] -= T::ONE;
            }
        }

        if let (Some(grads), Some(dl)) = (grads.as_deref_mut(), d_logits) {
            let vocab = self.cfg.tgt_vocab;
            let d = self.cfg.d_model;
            {
                let start = self.layout.find("out_proj.w").offset;
                let block = &mut grads[start..start + d * vocab + vocab];
                let (dw, db) = block.split_at_mut(d * vocab);
                gemm_at_b(&final_stack.out.data, final_stack.out.rows, d, &dl.data, vocab, dw);
                col_sum_into(&dl, db);
            }
            let mut d_out = Mat::zeros(final_stack.out.rows, d);
            gemm_a_bt(&dl.data, dl.rows, vocab, w.data, d, &mut d_out.data, false);

            match self.cfg.mode {
                ModelMode::EncoderDecoder => {
                    let enc = enc.expect("encoder cache");
                    let d_mem = self
                        .backward_stack(
                            StackKind::Decoder,
                            &final_stack,
                            Some(&enc.out),
                            d_out,
                            grads,
                            "tgt_embed",
                        )
                        .expect("memory grad");
                    self.backward_stack(StackKind::Encoder, &enc, None, d_mem, grads, "src_embed");
                }
                ModelMode::Tagger => {
                    self.backward_stack(
                        StackKind::Tagger,
                        &final_stack,
                        None,
                        d_out,
                        grads,
                        "src_embed",
                    );
                }
            }
        }
        Ok(ExampleLoss { loss_sum, positions })
    }

    /// Seeds a fresh RNG for one example's dropout, stable across worker
    /// scheduling.
    pub fn example_rng(seed: u64, step: usize, example: usize) -> ChaCha8Rng {
        let mix = seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add((step as u64) << 20)
            .wrapping_add(example as u64);
        ChaCha8Rng::seed_from_u64(mix)
    }
}
