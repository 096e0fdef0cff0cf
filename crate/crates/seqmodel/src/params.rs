//! Parameter storage: one flat arena of scalars plus a layout table mapping
//! tensor names to (offset, shape). The layout is a pure function of the
//! model config, which makes checkpoint validation and gradient iteration
//! straightforward.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelConfig, ModelMode};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub tensors: Vec<TensorSpec>,
    pub total: usize,
}

fn attn_tensors(prefix: &str, d: usize, out: &mut Vec<(String, usize, usize)>) {
    for w in ["wq", "wk", "wv", "wo"] {
        out.push((format!("{prefix}.{w}"), d, d));
    }
    for b in ["bq", "bk", "bv", "bo"] {
        out.push((format!("{prefix}.{b}"), 1, d));
    }
}

fn ln_tensors(prefix: &str, d: usize, out: &mut Vec<(String, usize, usize)>) {
    out.push((format!("{prefix}.gamma"), 1, d));
    out.push((format!("{prefix}.beta"), 1, d));
}

fn ff_tensors(prefix: &str, d: usize, d_ff: usize, out: &mut Vec<(String, usize, usize)>) {
    out.push((format!("{prefix}.w1"), d, d_ff));
    out.push((format!("{prefix}.b1"), 1, d_ff));
    out.push((format!("{prefix}.w2"), d_ff, d));
    out.push((format!("{prefix}.b2"), 1, d));
}

impl ParamLayout {
    pub fn for_config(cfg: &ModelConfig) -> ParamLayout {
        let d = cfg.d_model;
        let mut shapes: Vec<(String, usize, usize)> = Vec::new();
        shapes.push(("src_embed".into(), cfg.src_vocab, d));
        match cfg.mode {
            ModelMode::EncoderDecoder => {
                shapes.push(("tgt_embed".into(), cfg.tgt_vocab, d));
                for l in 0..cfg.n_layers {
                    let p = format!("enc{l}");
                    attn_tensors(&format!("{p}.attn"), d, &mut shapes);
                    ln_tensors(&format!("{p}.ln1"), d, &mut shapes);
                    ff_tensors(&format!("{p}.ff"), d, cfg.d_ff, &mut shapes);
                    ln_tensors(&format!("{p}.ln2"), d, &mut shapes);
                }
                for l in 0..cfg.n_layers {
                    let p = format!("dec{l}");
                    attn_tensors(&format!("{p}.self"), d, &mut shapes);
                    ln_tensors(&format!("{p}.ln1"), d, &mut shapes);
                    attn_tensors(&format!("{p}.cross"), d, &mut shapes);
                    ln_tensors(&format!("{p}.ln2"), d, &mut shapes);
                    ff_tensors(&format!("{p}.ff"), d, cfg.d_ff, &mut shapes);
                    ln_tensors(&format!("{p}.ln3"), d, &mut shapes);
                }
            }
            ModelMode::Tagger => {
                for l in 0..cfg.n_layers {
                    let p = format!("lay{l}");
                    attn_tensors(&format!("{p}.attn"), d, &mut shapes);
                    ln_tensors(&format!("{p}.ln1"), d, &mut shapes);
                    ff_tensors(&format!("{p}.ff"), d, cfg.d_ff, &mut shapes);
                    ln_tensors(&format!("{p}.ln2"), d, &mut shapes);
                }
            }
        }
        shapes.push(("out_proj.w".into(), d, cfg.tgt_vocab));
        shapes.push(("out_proj.b".into(), 1, cfg.tgt_vocab));

        let mut tensors = Vec::with_capacity(shapes.len());
        let mut offset = 0;
        for (name, rows, cols) in shapes {
            tensors.push(TensorSpec { name, offset, rows, cols });
            offset += rows * cols;
        }
        ParamLayout { tensors, total: offset }
    }

    pub fn find(&self, name: &str) -> &TensorSpec {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .unwrap_or_else(|| panic!("unknown tensor {name}"))
    }
}

/// A named view into an arena.
pub fn view<'a, T: Scalar>(arena: &'a [T], spec: &TensorSpec) -> MatRef<'a, T> {
    MatRef {
        rows: spec.rows,
        cols: spec.cols,
        data: &arena[spec.offset..spec.offset + spec.rows * spec.cols],
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a, T> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [T],
}

impl<'a, T: Scalar> MatRef<'a, T> {
    #[inline]
    pub fn row(&self, r: usize) -> &'a [T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_mat(&self) -> Mat<T> {
        Mat::from_vec(self.rows, self.cols, self.data.to_vec())
    }
}

/// Xavier-uniform weights, zero biases, identity layer norms.
pub fn init_arena<T: Scalar>(layout: &ParamLayout, seed: u64) -> Vec<T> {
    let mut arena = vec![T::ZERO; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for spec in &layout.tensors {
        let slice = &mut arena[spec.offset..spec.offset + spec.rows * spec.cols];
        if spec.name.ends_with(".gamma") {
            slice.iter_mut().for_each(|x| *x = T::ONE);
        } else if spec.name.ends_with(".beta")
            || spec.name.contains(".b")
            || spec.name.ends_with("out_proj.b")
        {
            // biases stay zero
        } else {
            let bound = (6.0 / (spec.rows + spec.cols) as f64).sqrt();
            for x in slice.iter_mut() {
                *x = T::from_f64(rng.gen_range(-bound..bound));
            }
        }
    }
    arena
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: ModelMode) -> ModelConfig {
        ModelConfig {
            mode,
            n_layers: 2,
            n_heads: 2,
            d_model: 8,
            d_ff: 16,
            dropout: 0.0,
            max_len: 32,
            src_vocab: 11,
            tgt_vocab: 7,
        }
    }

    #[test]
    fn layout_is_contiguous_and_deterministic() {
        for mode in [ModelMode::EncoderDecoder, ModelMode::Tagger] {
            let layout = ParamLayout::for_config(&cfg(mode));
            let mut offset = 0;
            for t in &layout.tensors {
                assert_eq!(t.offset, offset);
                offset += t.rows * t.cols;
            }
            assert_eq!(offset, layout.total);
            assert_eq!(layout, ParamLayout::for_config(&cfg(mode)));
        }
    }

    #[test]
    fn init_sets_gammas_to_one() {
        let layout = ParamLayout::for_config(&cfg(ModelMode::Tagger));
        let arena: Vec<f32> = init_arena(&layout, 1);
        let gamma = layout.find("lay0.ln1.gamma");
        assert!(view(&arena, gamma).data.iter().all(|&v| v == 1.0));
        let bias = layout.find("lay0.attn.bq");
        assert!(view(&arena, bias).data.iter().all(|&v| v == 0.0));
    }
}
