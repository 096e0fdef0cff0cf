//! Sequence tagging: one type (or the no-type symbol) per fragment token,
//! with a structural post-mask forcing non-identifier positions to `~`.

use minijava::{TokenKind, TypeBinding, NO_TYPE_TAG, UNKNOWN_TYPE};
use minijava::Token;
use seqmodel::{tag_topk, Checkpoint};

use crate::error::LenientError;

#[derive(Debug, Clone)]
pub struct TypeTagSequence {
    /// One tag per token; non-identifier positions always `~`.
    pub tags: Vec<String>,
    /// Ranked (type, probability) per identifier position; None elsewhere.
    pub topk: Vec<Option<Vec<(String, f64)>>>,
}

/// Tags a fragment. Identifier positions carry the model's top-k types; all
/// other positions are structurally `~`, independent of model output.
pub fn type_fragment(
    ckpt: &Checkpoint<f32>,
    fragment: &[Token],
    k: usize,
) -> Result<TypeTagSequence, LenientError> {
    let texts: Vec<String> = fragment.iter().map(|t| t.text.clone()).collect();
    let ids = ckpt.src_vocab.encode(&texts);
    let ranked = tag_topk(&ckpt.model, &ids, k.max(1) + 2)?;
    let mut tags = Vec::with_capacity(fragment.len());
    let mut topk = Vec::with_capacity(fragment.len());
    for (tok, position) in fragment.iter().zip(ranked) {
        if tok.kind != TokenKind::Identifier {
            tags.push(NO_TYPE_TAG.to_string());
            topk.push(None);
            continue;
        }
        // Control symbols never count as type predictions.
        let list: Vec<(String, f64)> = position
            .into_iter()
            .filter(|(id, _)| *id as usize >= seqmodel::vocab::SPECIALS.len())
            .map(|(id, p)| (ckpt.tgt_vocab.symbol(id).to_string(), p))
            .take(k)
            .collect();
        let top1 = list.first().map(|(t, _)| t.clone()).unwrap_or_else(|| NO_TYPE_TAG.into());
        tags.push(top1);
        topk.push(Some(list));
    }
    Ok(TypeTagSequence { tags, topk })
}

/// Top-1/top-k accuracy over identifier positions whose golden binding is a
/// real type (the no-type/unknown occurrences are not scored).
pub fn score_typing(
    predicted: &TypeTagSequence,
    golden: &[TypeBinding],
) -> Result<(f64, f64), LenientError> {
    let mut scored = 0usize;
    let mut top1 = 0usize;
    let mut topk = 0usize;
    for b in golden {
        if b.type_name == UNKNOWN_TYPE {
            continue;
        }
        if b.identifier_index >= predicted.tags.len() {
            return Err(LenientError::LengthMismatch {
                tags: predicted.tags.len(),
                tokens: b.identifier_index + 1,
            });
        }
        scored += 1;
        if predicted.tags[b.identifier_index] == b.type_name {
            top1 += 1;
        }
        if let Some(Some(list)) = predicted.topk.get(b.identifier_index) {
            if list.iter().any(|(t, _)| *t == b.type_name) {
                topk += 1;
            }
        }
    }
    if scored == 0 {
        return Ok((1.0, 1.0));
    }
    Ok((top1 as f64 / scored as f64, topk as f64 / scored as f64))
}
