//! Block-structure abstraction and repair: reduce a program to its
//! keyword/brace skeleton with placeholder symbols, check brace balance with
//! a single counter, and translate corrupted skeletons to repaired ones with
//! a validity filter.

use serde::{Deserialize, Serialize};

use minijava::{Token, TokenKind};
use seqmodel::{beam_decode, Checkpoint};

use crate::error::LenientError;

/// Maximum skeleton length accepted by the repair model.
pub const MAX_ABSTRACT_LEN: usize = 500;

/// Keywords preserved by the abstraction (everything else collapses into
/// placeholders). Statement-interior keywords like `new`, `this` and `super`
/// are deliberately absorbed into expressions.
pub const KEPT_KEYWORDS: [&str; 18] = [
    "class", "extends", "import", "public", "private", "protected", "static", "final", "void",
    "if", "else", "for", "while", "switch", "case", "default", "break", "return",
];

/// Keywords that can open a declaration head (`public C (`, `void main (`).
const DECL_HEAD_TRIGGERS: [&str; 6] = ["public", "private", "protected", "static", "final", "void"];

/// Control keywords whose following paren group becomes `paren_expression`.
const PAREN_TRIGGERS: [&str; 4] = ["if", "for", "while", "switch"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbsSym {
    Keyword(String),
    Open,
    Close,
    Expression,
    ParenExpression,
    SimpleName,
}

impl AbsSym {
    pub fn as_text(&self) -> &str {
        match self {
            AbsSym::Keyword(k) => k,
            AbsSym::Open => "{",
            AbsSym::Close => "}",
            AbsSym::Expression => "expression",
            AbsSym::ParenExpression => "paren_expression",
            AbsSym::SimpleName => "simple_name",
        }
    }

    pub fn parse(text: &str) -> Option<AbsSym> {
        match text {
            "{" => Some(AbsSym::Open),
            "}" => Some(AbsSym::Close),
            "expression" => Some(AbsSym::Expression),
            "paren_expression" => Some(AbsSym::ParenExpression),
            "simple_name" => Some(AbsSym::SimpleName),
            kw if KEPT_KEYWORDS.contains(&kw) => Some(AbsSym::Keyword(kw.to_string())),
            _ => None,
        }
    }

    pub fn is_brace(&self) -> bool {
        matches!(self, AbsSym::Open | AbsSym::Close)
    }

    /// Full skeleton alphabet: kept keywords, braces, placeholders.
    pub fn alphabet() -> Vec<String> {
        let mut v: Vec<String> = KEPT_KEYWORDS.iter().map(|s| s.to_string()).collect();
        v.extend(["{", "}", "expression", "paren_expression", "simple_name"].map(String::from));
        v
    }
}

/// A keyword/brace skeleton with, per symbol, the token span it covers.
/// Spans partition the input; symbols inserted by repair own empty spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractedProgram {
    pub symbols: Vec<AbsSym>,
    /// Half-open token ranges aligned with `symbols`.
    pub spans: Vec<(usize, usize)>,
}

impl AbstractedProgram {
    pub fn text(&self) -> String {
        self.symbols.iter().map(|s| s.as_text()).collect::<Vec<_>>().join(" ")
    }

    pub fn braces_balanced(&self) -> bool {
        balanced(self.symbols.iter().map(|s| match s {
            AbsSym::Open => 1,
            AbsSym::Close => -1,
            _ => 0,
        }))
    }
}

/// Token-syntactic abstraction; works on malformed input. Keywords and curly
/// braces survive; condition/header paren groups become `paren_expression`;
/// declaration-head names become `simple_name`; every other maximal run
/// collapses to a single `expression`.
pub fn abstract_program(tokens: &[Token]) -> AbstractedProgram {
    let mut symbols = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut expr_start: Option<usize> = None;
    let mut i = 0usize;

    let flush_expr = |symbols: &mut Vec<AbsSym>, spans: &mut Vec<(usize, usize)>,
                          start: &mut Option<usize>, end: usize| {
        if let Some(s) = start.take() {
            if end > s {
                symbols.push(AbsSym::Expression);
                spans.push((s, end));
            }
        }
    };

    while i < tokens.len() {
        let t = &tokens[i];
        let text = t.text.as_str();
        if text == "{" || text == "}" {
            flush_expr(&mut symbols, &mut spans, &mut expr_start, i);
            symbols.push(if text == "{" { AbsSym::Open } else { AbsSym::Close });
            spans.push((i, i + 1));
            i += 1;
        } else if KEPT_KEYWORDS.contains(&text) {
            flush_expr(&mut symbols, &mut spans, &mut expr_start, i);
            symbols.push(AbsSym::Keyword(text.to_string()));
            spans.push((i, i + 1));
            let kw = text;
            i += 1;
            if (kw == "class" || kw == "extends")
                && tokens.get(i).is_some_and(|t| t.kind == TokenKind::Identifier)
            {
                symbols.push(AbsSym::SimpleName);
                spans.push((i, i + 1));
                i += 1;
            } else if PAREN_TRIGGERS.contains(&kw) {
                if let Some(end) = scan_paren_group(tokens, i) {
                    symbols.push(AbsSym::ParenExpression);
                    spans.push((i, end));
                    i = end;
                }
            } else if DECL_HEAD_TRIGGERS.contains(&kw) {
                // `public Name ( params )` — constructor/method head
                if tokens.get(i).is_some_and(|t| t.kind == TokenKind::Identifier)
                    && tokens.get(i + 1).is_some_and(|t| t.text == "(")
                {
                    symbols.push(AbsSym::SimpleName);
                    spans.push((i, i + 1));
                    i += 1;
                    if let Some(end) = scan_paren_group(tokens, i) {
                        symbols.push(AbsSym::ParenExpression);
                        spans.push((i, end));
                        i = end;
                    }
                }
            }
        } else {
            if expr_start.is_none() {
                expr_start = Some(i);
            }
            i += 1;
        }
    }
    flush_expr(&mut symbols, &mut spans, &mut expr_start, tokens.len());

    // Collapse any adjacent expressions (can arise around failed paren scans).
    let mut out_syms: Vec<AbsSym> = Vec::with_capacity(symbols.len());
    let mut out_spans: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for (sym, span) in symbols.into_iter().zip(spans) {
        if sym == AbsSym::Expression
            && out_syms.last() == Some(&AbsSym::Expression)
            && out_spans.last().is_some_and(|&(_, e)| e == span.0)
        {
            out_spans.last_mut().expect("nonempty").1 = span.1;
        } else {
            out_syms.push(sym);
            out_spans.push(span);
        }
    }
    AbstractedProgram { symbols: out_syms, spans: out_spans }
}

/// Balanced-paren scan starting at an `(`; bails at braces (a `{` inside an
/// unclosed condition means the group is malformed, so it stays expression
/// material).
fn scan_paren_group(tokens: &[Token], start: usize) -> Option<usize> {
    if tokens.get(start).map(|t| t.text.as_str()) != Some("(") {
        return None;
    }
    let mut depth = 0i64;
    for (i, t) in tokens.iter().enumerate().skip(start) {
        match t.text.as_str() {
            "(" => depth += 1,
            ")" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            "{" | "}" => return None,
            _ => {}
        }
    }
    None
}

/// Single left-to-right counter: true iff it never goes negative and ends
/// at zero.
pub fn braces_balanced(tokens: &[Token]) -> bool {
    balanced(tokens.iter().map(|t| match t.text.as_str() {
        "{" => 1,
        "}" => -1,
        _ => 0,
    }))
}

fn balanced(deltas: impl Iterator<Item = i64>) -> bool {
    let mut counter = 0i64;
    for d in deltas {
        counter += d;
        if counter < 0 {
            return false;
        }
    }
    counter == 0
}

/// The repaired skeleton plus how each output symbol maps back to input
/// tokens.
#[derive(Debug, Clone)]
pub struct RepairedSkeleton {
    pub program: AbstractedProgram,
    /// Indexes of input tokens dropped by the repair (deleted braces).
    pub dropped_tokens: Vec<usize>,
    /// Output symbol indexes that were inserted by the repair (empty spans).
    pub inserted: Vec<usize>,
}

/// Beam-translates a corrupted skeleton and keeps the first candidate that
/// is brace-balanced and preserves the non-brace symbol subsequence; slots
/// re-align by matching that subsequence.
pub fn blockfix_repair(
    ckpt: &Checkpoint<f32>,
    abstracted: &AbstractedProgram,
    beam: usize,
) -> Result<RepairedSkeleton, LenientError> {
    if abstracted.symbols.len() > MAX_ABSTRACT_LEN {
        return Err(LenientError::InputTooLong(abstracted.symbols.len()));
    }
    let src_text: Vec<String> = abstracted.symbols.iter().map(|s| s.as_text().to_string()).collect();
    let src_ids = ckpt.src_vocab.encode(&src_text);
    let hyps = beam_decode(&ckpt.model, &src_ids, beam.max(1))?;
    for hyp in hyps {
        let texts = ckpt.tgt_vocab.decode(&hyp.tokens);
        let Some(symbols) = texts.iter().map(|t| AbsSym::parse(t)).collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        if let Some(repaired) = align_repair(abstracted, symbols) {
            return Ok(repaired);
        }
    }
    Err(LenientError::RepairFailed)
}

/// Accepts an output symbol sequence iff it is brace-balanced and its
/// non-brace subsequence equals the input's; builds the span alignment.
pub fn align_repair(
    input: &AbstractedProgram,
    output: Vec<AbsSym>,
) -> Option<RepairedSkeleton> {
    if !balanced(output.iter().map(|s| match s {
        AbsSym::Open => 1,
        AbsSym::Close => -1,
        _ => 0,
    })) {
        return None;
    }
    let in_nb: Vec<&AbsSym> = input.symbols.iter().filter(|s| !s.is_brace()).collect();
    let out_nb: Vec<&AbsSym> = output.iter().filter(|s| !s.is_brace()).collect();
    if in_nb.len() != out_nb.len() || in_nb.iter().zip(&out_nb).any(|(a, b)| a != b) {
        return None;
    }

    // Walk both sequences; between consecutive non-brace anchors, greedily
    // match braces of the same direction. Unmatched input braces are
    // dropped tokens; unmatched output braces are insertions.
    let mut spans = Vec::with_capacity(output.len());
    let mut dropped = Vec::new();
    let mut inserted = Vec::new();
    let mut i = 0usize; // input symbol cursor
    for (oi, sym) in output.iter().enumerate() {
        if !sym.is_brace() {
            // consume input braces until the matching non-brace anchor
            while input.symbols[i].is_brace() {
                dropped.extend(span_tokens(input.spans[i]));
                i += 1;
            }
            spans.push(input.spans[i]);
            i += 1;
        } else {
            // try to find this brace among the input braces before the next
            // input non-brace anchor
            let mut j = i;
            let mut matched = None;
            while j < input.symbols.len() && input.symbols[j].is_brace() {
                if input.symbols[j] == *sym {
                    matched = Some(j);
                    break;
                }
                j += 1;
            }
            match matched {
                Some(j) => {
                    for k in i..j {
                        dropped.extend(span_tokens(input.spans[k]));
                    }
                    spans.push(input.spans[j]);
                    i = j + 1;
                }
                None => {
                    let anchor = input.spans.get(i).map(|&(s, _)| s).unwrap_or_else(|| {
                        input.spans.last().map(|&(_, e)| e).unwrap_or(0)
                    });
                    spans.push((anchor, anchor));
                    inserted.push(oi);
                }
            }
        }
    }
    while i < input.symbols.len() {
        if input.symbols[i].is_brace() {
            dropped.extend(span_tokens(input.spans[i]));
            i += 1;
        } else {
            return None;
        }
    }
    Some(RepairedSkeleton {
        program: AbstractedProgram { symbols: output, spans },
        dropped_tokens: dropped,
        inserted,
    })
}

fn span_tokens((s, e): (usize, usize)) -> impl Iterator<Item = usize> {
    s..e
}
