//! Lenient fragment parsing: translate (possibly corrupted) tokens into a
//! redeemed serialized tree, validate candidates, and apply the implied
//! repairs.

use minijava::{reinsert_tokens, reparse_fragment, unparse_tokens, ErrorMarker, SerializedAst};
use minijava::{Ast, SerialSym, Token};
use seqmodel::{beam_decode, Checkpoint};

use crate::corruptor::{Edit, EditKind};
use crate::error::LenientError;

#[derive(Debug, Clone)]
pub struct RepairCandidate {
    pub serialized: SerializedAst,
    /// Total log-probability from beam decoding.
    pub score: f64,
    /// Token edits implied by the error markers (repair view: `Insert` adds
    /// a missing separator, `Drop` removes a spurious token).
    pub edits: Vec<Edit>,
    /// Balanced, arity-consistent, and strict-parseable after repair.
    pub valid: bool,
}

/// Beam-decodes repair candidates for a fragment. Invalid candidates stay in
/// the list (valid=false) so rank bookkeeping matches the raw beam.
pub fn parse_leniently(
    ckpt: &Checkpoint<f32>,
    fragment: &[Token],
    k: usize,
) -> Result<Vec<RepairCandidate>, LenientError> {
    let texts: Vec<String> = fragment.iter().map(|t| t.text.clone()).collect();
    let src_ids = ckpt.src_vocab.encode(&texts);
    let hyps = beam_decode(&ckpt.model, &src_ids, k.max(1))?;
    Ok(hyps
        .into_iter()
        .map(|hyp| {
            let symbols: Option<Vec<SerialSym>> = hyp
                .tokens
                .iter()
                .map(|&id| SerialSym::parse(ckpt.tgt_vocab.symbol(id)))
                .collect();
            let serialized = match symbols {
                Some(symbols) => SerializedAst { symbols },
                None => {
                    return RepairCandidate {
                        serialized: SerializedAst::default(),
                        score: hyp.score,
                        edits: Vec::new(),
                        valid: false,
                    }
                }
            };
            let (valid, edits) = validate(&serialized, fragment);
            RepairCandidate { serialized, score: hyp.score, edits, valid }
        })
        .collect())
}

fn validate(serialized: &SerializedAst, fragment: &[Token]) -> (bool, Vec<Edit>) {
    if !serialized.is_balanced() {
        return (false, Vec::new());
    }
    let Ok(forest) = reinsert_tokens(serialized, fragment) else {
        return (false, Vec::new());
    };
    let edits = implied_edits(&forest);
    let Ok(repaired) = unparse_tokens(&forest, true) else {
        return (false, edits);
    };
    let valid = reparse_fragment(&repaired).is_some();
    (valid, edits)
}

/// Walks a reinserted forest and lists the token edits its markers imply,
/// with positions in the repaired token stream.
fn implied_edits(forest: &[Ast]) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut pos = 0usize;
    for ast in forest {
        walk(ast, &mut pos, &mut edits);
    }
    edits
}

fn walk(ast: &Ast, pos: &mut usize, edits: &mut Vec<Edit>) {
    match ast {
        Ast::Node { children, .. } => {
            for c in children {
                walk(c, pos, edits);
            }
        }
        Ast::Leaf { .. } => *pos += 1,
        Ast::Marker { marker, token } => match marker {
            ErrorMarker::ExtraPunctuation => {
                edits.push(Edit {
                    kind: EditKind::Drop,
                    separator: token.as_ref().map(|t| t.text.clone()).unwrap_or_default(),
                    position: *pos,
                });
                // the spurious token is dropped, so it does not advance pos
            }
            m => {
                edits.push(Edit {
                    kind: EditKind::Insert,
                    separator: m.separator().unwrap_or("").to_string(),
                    position: *pos,
                });
                *pos += 1;
            }
        },
    }
}

/// Materializes a candidate's repairs over the fragment tokens; the result
/// strict-parses by construction (the validity filter already checked).
pub fn apply_repairs(
    fragment: &[Token],
    candidate: &RepairCandidate,
) -> Result<Vec<Token>, LenientError> {
    if !candidate.valid {
        return Err(LenientError::InvalidCandidate);
    }
    let forest =
        reinsert_tokens(&candidate.serialized, fragment).map_err(LenientError::Serial)?;
    let mut tokens = unparse_tokens(&forest, true).map_err(LenientError::Serial)?;
    for (i, t) in tokens.iter_mut().enumerate() {
        t.index = i;
    }
    Ok(tokens)
}

/// Reinserted rank-1 forest for a candidate (markers in tree position).
pub fn candidate_forest(
    fragment: &[Token],
    candidate: &RepairCandidate,
) -> Result<Vec<Ast>, LenientError> {
    reinsert_tokens(&candidate.serialized, fragment).map_err(LenientError::Serial)
}
