//! Error seeding: drop or insert separator tokens in fragments (biased
//! toward stutters), pairing each corrupted input with a redeemed serialized
//! tree that marks the edit in place; brace noising for block skeletons; and
//! the student-error taxonomy classifier.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use minijava::{
    is_keyword, is_primitive_type, is_separator_text, reinsert_tokens, serialize_forest, Ast,
    ErrorMarker, SerializedAst, Token, TokenKind,
};

use crate::blockfix::AbsSym;
use crate::corpus::Fragment;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorruptionConfig {
    /// Fraction of fragments that lose a separator.
    pub drop_fraction: f64,
    /// Fraction of fragments that gain a separator.
    pub insert_fraction: f64,
    /// Among insertions, probability the separator stutters (repeats
    /// adjacent to an existing occurrence).
    pub stutter_probability: f64,
    /// Probability a mutated fragment receives a second, independent edit.
    pub double_mutation_fraction: f64,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig {
            drop_fraction: 0.30,
            insert_fraction: 0.20,
            stutter_probability: 0.70,
            double_mutation_fraction: 0.30,
        }
    }
}

impl CorruptionConfig {
    pub fn validate(&self) -> Result<(), String> {
        for p in [
            self.drop_fraction,
            self.insert_fraction,
            self.stutter_probability,
            self.double_mutation_fraction,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} outside [0,1]"));
            }
        }
        if self.drop_fraction + self.insert_fraction > 1.0 {
            return Err("drop_fraction + insert_fraction exceeds 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Drop,
    Insert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    pub separator: String,
    /// Position in the mutated token sequence: for drops, the index the
    /// token would have had; for inserts, the index of the inserted token.
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub edits: Vec<Edit>,
}

impl MutationRecord {
    pub fn count(&self) -> usize {
        self.edits.len()
    }
}

#[derive(Debug, Clone)]
pub struct CorruptOutcome {
    pub tokens: Vec<Token>,
    pub redeemed: SerializedAst,
    pub mutation: Option<MutationRecord>,
}

/// Seeds one (or, with `double_mutation_fraction`, two) separator edits into
/// a fragment. The redeemed target is maintained as tree surgery on the
/// golden forest, so corrupted tokens and target always agree: the corrupted
/// sequence is the forest's raw unparse and the target its serialization.
pub fn corrupt_fragment(
    fragment: &Fragment,
    cfg: &CorruptionConfig,
    rng: &mut ChaCha8Rng,
) -> CorruptOutcome {
    let mut forest = reinsert_tokens(&fragment.golden, &fragment.tokens)
        .expect("fragment golden must reinsert over its own tokens");

    let roll: f64 = rng.gen_range(0.0..1.0);
    let first = if roll < cfg.drop_fraction {
        Some(EditKind::Drop)
    } else if roll < cfg.drop_fraction + cfg.insert_fraction {
        Some(EditKind::Insert)
    } else {
        None
    };
    let Some(first) = first else {
        return CorruptOutcome {
            tokens: fragment.tokens.clone(),
            redeemed: fragment.golden.clone(),
            mutation: None,
        };
    };

    let mut edits = Vec::new();
    if let Some(edit) = apply_edit(&mut forest, first, cfg, rng) {
        edits.push(edit);
        if rng.gen_range(0.0..1.0) < cfg.double_mutation_fraction {
            // The second edit's kind follows the same drop/insert proportions.
            let kind = if rng.gen_range(0.0..1.0)
                < cfg.drop_fraction / (cfg.drop_fraction + cfg.insert_fraction)
            {
                EditKind::Drop
            } else {
                EditKind::Insert
            };
            if let Some(edit) = apply_edit(&mut forest, kind, cfg, rng) {
                edits.push(edit);
            }
        }
    }
    if edits.is_empty() {
        // No separator available: fragment returned untouched.
        return CorruptOutcome {
            tokens: fragment.tokens.clone(),
            redeemed: fragment.golden.clone(),
            mutation: None,
        };
    }

    let mut tokens = minijava::unparse_tokens(&forest, false).expect("forest stays bound");
    for (i, t) in tokens.iter_mut().enumerate() {
        t.index = i;
    }
    CorruptOutcome {
        tokens,
        redeemed: serialize_forest(&forest),
        mutation: Some(MutationRecord { edits }),
    }
}

fn apply_edit(
    forest: &mut Vec<Ast>,
    kind: EditKind,
    cfg: &CorruptionConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Edit> {
    let raw = raw_tokens(forest);
    let separators: Vec<usize> = raw
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == TokenKind::Separator)
        .map(|(i, _)| i)
        .collect();
    if separators.is_empty() {
        return None;
    }
    match kind {
        EditKind::Drop => {
            let pos = separators[rng.gen_range(0..separators.len())];
            let sep = raw[pos].text.clone();
            let marker = ErrorMarker::for_separator(&sep)?;
            replace_leaf_with_marker(forest, pos, marker);
            Some(Edit { kind: EditKind::Drop, separator: sep, position: pos })
        }
        EditKind::Insert => {
            let anchor = separators[rng.gen_range(0..separators.len())];
            let sep = raw[anchor].text.clone();
            let pos = if rng.gen_range(0.0..1.0) < cfg.stutter_probability {
                anchor + 1
            } else {
                rng.gen_range(0..=raw.len())
            };
            let token = Token::new(sep.clone(), TokenKind::Separator, pos);
            insert_extra(forest, pos, token);
            Some(Edit { kind: EditKind::Insert, separator: sep, position: pos })
        }
    }
}

/// Raw token stream of a redeemed forest: leaves plus `ExtraPunctuation`
/// tokens; `Missing*` markers contribute nothing.
fn raw_tokens(forest: &[Ast]) -> Vec<Token> {
    minijava::unparse_tokens(forest, false).expect("bound forest")
}

fn raw_arity(ast: &Ast) -> usize {
    match ast {
        Ast::Node { children, .. } => children.iter().map(raw_arity).sum(),
        Ast::Leaf { .. } => 1,
        Ast::Marker { marker, .. } => {
            if *marker == ErrorMarker::ExtraPunctuation {
                1
            } else {
                0
            }
        }
    }
}

/// Replaces the leaf at raw position `pos` with a `Missing*` marker.
fn replace_leaf_with_marker(forest: &mut [Ast], pos: usize, marker: ErrorMarker) {
    let mut offset = 0usize;
    for node in forest.iter_mut() {
        let arity = raw_arity(node);
        if pos < offset + arity {
            replace_in(node, pos - offset, marker);
            return;
        }
        offset += arity;
    }
    panic!("leaf position {pos} out of range");
}

fn replace_in(node: &mut Ast, pos: usize, marker: ErrorMarker) {
    match node {
        Ast::Leaf { .. } | Ast::Marker { .. } => {
            debug_assert_eq!(pos, 0);
            *node = Ast::marker(marker);
        }
        Ast::Node { children, .. } => {
            let mut offset = 0usize;
            for child in children.iter_mut() {
                let arity = raw_arity(child);
                if pos < offset + arity {
                    replace_in(child, pos - offset, marker);
                    return;
                }
                offset += arity;
            }
            unreachable!("position inside node");
        }
    }
}

/// Inserts an `ExtraPunctuation` marker (owning `token`) so that the marker
/// sits at raw position `pos`. The marker attaches before the highest
/// ancestor that starts at `pos` — an extra token before a statement lands
/// between statements, not inside the next one. End-of-sequence insertions
/// attach after the highest ancestor ending at the last position.
fn insert_extra(forest: &mut Vec<Ast>, pos: usize, token: Token) {
    let total: usize = forest.iter().map(raw_arity).sum();
    let marker = Ast::Marker { marker: ErrorMarker::ExtraPunctuation, token: Some(token) };
    if pos >= total {
        forest.push(marker);
        return;
    }
    let mut offset = 0usize;
    for i in 0..forest.len() {
        let arity = raw_arity(&forest[i]);
        if pos < offset + arity {
            if pos == offset {
                forest.insert(i, marker);
            } else {
                insert_in(&mut forest[i], pos - offset, marker);
            }
            return;
        }
        offset += arity;
    }
    unreachable!("insert position bounded by total");
}

fn insert_in(node: &mut Ast, pos: usize, marker: Ast) {
    let Ast::Node { children, .. } = node else {
        panic!("cannot descend into a leaf for insertion");
    };
    let mut offset = 0usize;
    for i in 0..children.len() {
        let arity = raw_arity(&children[i]);
        if pos < offset + arity {
            if pos == offset {
                children.insert(i, marker);
            } else {
                insert_in(&mut children[i], pos - offset, marker);
            }
            return;
        }
        offset += arity;
    }
    unreachable!("position inside node");
}

// ---- block noising ----------------------------------------------------------

/// Brace corruption for BlockFix training: half insertions, half deletions;
/// insertions stutter next to an identical brace 70% of the time. Returns
/// (corrupted, original) symbol sequences.
pub fn corrupt_blocks(symbols: &[AbsSym], rng: &mut ChaCha8Rng) -> (Vec<AbsSym>, Vec<AbsSym>) {
    let braces: Vec<usize> = symbols
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, AbsSym::Open | AbsSym::Close))
        .map(|(i, _)| i)
        .collect();
    let mut corrupted = symbols.to_vec();
    let delete = rng.gen_bool(0.5) && !braces.is_empty();
    if delete {
        let at = braces[rng.gen_range(0..braces.len())];
        corrupted.remove(at);
    } else {
        let sym = if rng.gen_bool(0.5) { AbsSym::Open } else { AbsSym::Close };
        let same: Vec<usize> = symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == sym)
            .map(|(i, _)| i)
            .collect();
        let at = if !same.is_empty() && rng.gen_range(0.0..1.0) < 0.70 {
            same[rng.gen_range(0..same.len())] + 1
        } else {
            rng.gen_range(0..=symbols.len())
        };
        corrupted.insert(at, sym);
    }
    (corrupted, symbols.to_vec())
}

// ---- error taxonomy ----------------------------------------------------------

/// Categories of student code error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    Semicolon,
    Curly,
    Parenthesis,
    ArithmeticOp,
    Keyword,
    Comma,
    Datatype,
    Bracket,
    Other,
}

impl ErrorCategory {
    pub fn of_token(text: &str) -> ErrorCategory {
        match text {
            ";" => ErrorCategory::Semicolon,
            "{" | "}" => ErrorCategory::Curly,
            "(" | ")" => ErrorCategory::Parenthesis,
            "+" | "-" | "*" | "/" | "%" => ErrorCategory::ArithmeticOp,
            "," => ErrorCategory::Comma,
            "[" | "]" => ErrorCategory::Bracket,
            _ if is_primitive_type(text) => ErrorCategory::Datatype,
            _ if is_keyword(text) => ErrorCategory::Keyword,
            _ => ErrorCategory::Other,
        }
    }
}

/// Category of the minimal single-token edit between two sequences;
/// `Other` when no single-token insert/delete/substitution explains the
/// difference.
pub fn classify_error(before: &[Token], after: &[Token]) -> ErrorCategory {
    assert!(!token_texts_eq(before, after), "sequences must differ");
    let common_prefix = before
        .iter()
        .zip(after.iter())
        .take_while(|(a, b)| a.text == b.text)
        .count();
    let max_suffix = before.len().min(after.len()) - common_prefix;
    let common_suffix = before
        .iter()
        .rev()
        .zip(after.iter().rev())
        .take(max_suffix)
        .take_while(|(a, b)| a.text == b.text)
        .count();
    let b_gap = before.len() as i64 - (common_prefix + common_suffix) as i64;
    let a_gap = after.len() as i64 - (common_prefix + common_suffix) as i64;
    match (b_gap, a_gap) {
        (1, 0) => ErrorCategory::of_token(&before[common_prefix].text),
        (0, 1) => ErrorCategory::of_token(&after[common_prefix].text),
        (1, 1) => {
            // substitution: classify by the replaced token
            let replaced = &before[common_prefix].text;
            let cat = ErrorCategory::of_token(replaced);
            if cat == ErrorCategory::Other {
                ErrorCategory::of_token(&after[common_prefix].text)
            } else {
                cat
            }
        }
        _ => ErrorCategory::Other,
    }
}

fn token_texts_eq(a: &[Token], b: &[Token]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.text == y.text)
}

/// Applies the repairs implied by a redeemed serialized tree structurally:
/// `Missing*` markers become plain `PunctTerminal` leaves and
/// `ExtraPunctuation` nodes disappear. On corruptor output this recovers the
/// clean golden serialization exactly.
pub fn redeemed_to_clean(redeemed: &SerializedAst) -> SerializedAst {
    use minijava::SerialSym;
    let mut out = Vec::with_capacity(redeemed.symbols.len());
    let mut skip_depth: Option<usize> = None;
    let mut depth = 0usize;
    for sym in &redeemed.symbols {
        match sym {
            SerialSym::Open => {
                depth += 1;
                if skip_depth.is_none() {
                    out.push(*sym);
                }
            }
            SerialSym::Close => {
                if let Some(d) = skip_depth {
                    if depth == d {
                        skip_depth = None;
                        depth -= 1;
                        continue;
                    }
                }
                if skip_depth.is_none() {
                    out.push(*sym);
                }
                depth -= 1;
            }
            SerialSym::Marker(ErrorMarker::ExtraPunctuation) => {
                // drop the marker node: remove its open paren and swallow the close
                out.pop();
                skip_depth = Some(depth);
            }
            SerialSym::Marker(_) => out.push(SerialSym::Label(minijava::Label::PunctTerminal)),
            SerialSym::Label(_) => {
                if skip_depth.is_none() {
                    out.push(*sym);
                }
            }
        }
    }
    SerializedAst { symbols: out }
}

/// is_separator_text re-exported spot: kept for the corruptor's callers.
pub fn separator_positions(tokens: &[Token]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| is_separator_text(&t.text))
        .map(|(i, _)| i)
        .collect()
}
