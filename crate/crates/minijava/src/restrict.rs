//! Restriction of parse trees to token ranges, the wrap-and-parse baseline,
//! and the completion-based strict re-parse used to validate repairs.
//!
//! A fragment cut out of a well-formed file parses "strictly" in the sense
//! that its tokens are a contiguous slice of a parseable unit; the tree it
//! denotes is the file tree restricted to its token range. A partially
//! covered node survives only when one of its own leaf tokens is in range
//! (a method header keeps its `MethodDeclaration`, the plain statement
//! `int x = 0 ;` does not drag in `Block` or `TypeDeclaration` ancestors),
//! so restrictions are balanced forests, possibly with several roots.

use std::ops::Range;

use crate::ast::{Ast, Label};
use crate::parser::{parse, ParseMode};
use crate::token::{must_tokenize, Token};

/// Restricts a tree to the leaves whose token index lies in `range`.
pub fn restrict(ast: &Ast, range: Range<usize>) -> Vec<Ast> {
    match ast {
        Ast::Leaf { token, .. } | Ast::Marker { token, .. } => match token {
            Some(t) if range.contains(&t.index) => vec![ast.clone()],
            _ => vec![],
        },
        Ast::Node { label, children } => {
            let Some((lo, hi)) = leaf_span(ast) else { return vec![] };
            if lo >= range.end || hi < range.start {
                return vec![];
            }
            if lo >= range.start && hi < range.end {
                return vec![ast.clone()];
            }
            let kept: Vec<Ast> =
                children.iter().flat_map(|c| restrict(c, range.clone())).collect();
            if kept.is_empty() {
                vec![]
            } else if children.iter().any(|c| direct_leaf_in_range(c, &range)) {
                vec![Ast::node(*label, kept)]
            } else {
                // No token of this node itself is in range; splice children.
                kept
            }
        }
    }
}

fn direct_leaf_in_range(child: &Ast, range: &Range<usize>) -> bool {
    match child {
        Ast::Leaf { token, .. } | Ast::Marker { token, .. } => {
            token.as_ref().is_some_and(|t| range.contains(&t.index))
        }
        Ast::Node { .. } => false,
    }
}

/// First and last leaf token index covered by the tree, if any.
pub fn leaf_span(ast: &Ast) -> Option<(usize, usize)> {
    match ast {
        Ast::Leaf { token, .. } | Ast::Marker { token, .. } => {
            token.as_ref().map(|t| (t.index, t.index))
        }
        Ast::Node { children, .. } => {
            let mut lo = None;
            let mut hi = None;
            for c in children {
                if let Some((clo, chi)) = leaf_span(c) {
                    if lo.is_none() {
                        lo = Some(clo);
                    }
                    hi = Some(chi);
                }
            }
            Some((lo?, hi?))
        }
    }
}

fn reindexed(prefix: &[Token], fragment: &[Token], suffix: &[Token]) -> Vec<Token> {
    let mut all: Vec<Token> = Vec::with_capacity(prefix.len() + fragment.len() + suffix.len());
    all.extend_from_slice(prefix);
    all.extend_from_slice(fragment);
    all.extend_from_slice(suffix);
    for (i, t) in all.iter_mut().enumerate() {
        t.index = i;
    }
    all
}

fn parse_wrapped(
    prefix: &[Token],
    fragment: &[Token],
    suffix: &[Token],
    mode: ParseMode,
) -> Option<Vec<Ast>> {
    let all = reindexed(prefix, fragment, suffix);
    let ast = parse(&all, mode).ok()?;
    let range = prefix.len()..prefix.len() + fragment.len();
    let forest = restrict(&ast, range);
    // A full-range restriction returns the synthetic CompilationUnit root.
    match forest.as_slice() {
        [Ast::Node { label: Label::CompilationUnit, children }] => Some(children.clone()),
        _ => Some(forest),
    }
}

/// The paper's wrap-and-parse trick: wrap in a dummy class, then a dummy
/// method; on the first strict-parse success return the fragment's sub-tree.
pub fn wrap_and_parse(fragment: &[Token]) -> Option<Ast> {
    if fragment.is_empty() {
        return None;
    }
    let class_prefix = must_tokenize("class C {");
    let method_prefix = must_tokenize("void m ( ) {");
    let closer = must_tokenize("}");
    let forest = parse_wrapped(&class_prefix, fragment, &closer, ParseMode::File)
        .or_else(|| parse_wrapped(&method_prefix, fragment, &closer, ParseMode::ClassBody))?;
    Some(into_single(forest))
}

fn into_single(mut forest: Vec<Ast>) -> Ast {
    if forest.len() == 1 {
        forest.pop().expect("checked")
    } else {
        Ast::node(Label::CompilationUnit, forest)
    }
}

/// Completion-based strict re-parse of a fragment: tries the bare modes,
/// then re-establishes the enclosing context a boundary cut removed (open
/// headers for trailing `{`, generic openers for stray `}`) and parses
/// strictly. Returns the restriction forest on the first success.
///
/// The token-level syntax inside the fragment is never repaired here — this
/// accepts exactly the streams that are contiguous slices of parseable code.
pub fn reparse_fragment(fragment: &[Token]) -> Option<Vec<Ast>> {
    if fragment.is_empty() {
        return None;
    }
    let empty: Vec<Token> = Vec::new();
    // Statement position outranks member position: a bare `int x = 0 ;` is
    // far more often a local than a field, and the evaluator treats the two
    // declaration kinds as interchangeable anyway.
    for mode in [ParseMode::File, ParseMode::MethodBody, ParseMode::ClassBody] {
        if let Some(forest) = parse_wrapped(&empty, fragment, &empty, mode) {
            return Some(forest);
        }
    }

    // Brace accounting: `neg` stray closers need that many enclosing levels
    // reopened; unclosed opens get closers appended.
    let mut balance: i64 = 0;
    let mut neg: i64 = 0;
    let mut case_at_top = false;
    for t in fragment {
        match t.text.as_str() {
            "{" => balance += 1,
            "}" => {
                balance -= 1;
                neg = neg.min(balance);
            }
            "case" | "default" if balance == neg => case_at_top = true,
            _ => {}
        }
    }
    let neg = (-neg) as usize;

    let mut attempts: Vec<(Vec<Token>, ParseMode)> = Vec::new();
    if neg == 0 {
        // Fragments with unclosed opens at statement, member or file level.
        attempts.push((Vec::new(), ParseMode::MethodBody));
        attempts.push((Vec::new(), ParseMode::ClassBody));
        attempts.push((Vec::new(), ParseMode::File));
    }
    if fragment[0].text == "else" {
        attempts.push((must_tokenize("if ( w ) { }"), ParseMode::MethodBody));
    }
    if case_at_top {
        let mut ctx = must_tokenize("switch ( w ) {");
        for _ in 0..neg {
            ctx.extend(must_tokenize("if ( w ) {"));
        }
        attempts.push((ctx, ParseMode::MethodBody));
    }
    // Fragment still inside nested statement blocks after `neg` closers.
    let mut stmt_ctx = Vec::new();
    for _ in 0..neg {
        stmt_ctx.extend(must_tokenize("if ( w ) {"));
    }
    attempts.push((stmt_ctx, ParseMode::MethodBody));
    // Fragment crossing the end of a method into the class body.
    if neg >= 1 {
        let mut ctx = must_tokenize("void w ( ) {");
        for _ in 0..neg - 1 {
            ctx.extend(must_tokenize("if ( w ) {"));
        }
        attempts.push((ctx, ParseMode::ClassBody));
    }
    // Fragment crossing the end of a class.
    if neg >= 2 {
        let mut ctx = must_tokenize("class W { void w ( ) {");
        for _ in 0..neg - 2 {
            ctx.extend(must_tokenize("if ( w ) {"));
        }
        attempts.push((ctx, ParseMode::File));
    }

    for (prefix, mode) in attempts {
        let prefix_depth: i64 = prefix
            .iter()
            .map(|t| match t.text.as_str() {
                "{" => 1,
                "}" => -1,
                _ => 0,
            })
            .sum();
        let open = prefix_depth + balance;
        if open < 0 {
            continue;
        }
        let closers: Vec<Token> =
            std::iter::repeat(must_tokenize("}")[0].clone()).take(open as usize).collect();
        if let Some(forest) = parse_wrapped(&prefix, fragment, &closers, mode) {
            return Some(forest);
        }
        // Headers ("if ( x )", "public C ( int b )") need a body before the closers.
        let mut body_then_closers = must_tokenize("{ }");
        body_then_closers.extend(closers);
        if let Some(forest) = parse_wrapped(&prefix, fragment, &body_then_closers, mode) {
            return Some(forest);
        }
    }
    None
}
