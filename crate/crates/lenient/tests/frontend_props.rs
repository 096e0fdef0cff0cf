//! Property suites for the frontend, driven by the synthetic generator:
//! round trips, serialization inversion, abstraction reconstruction, type
//! derivation against an independent token-level resolver.

use std::collections::HashMap;

use lenient::blockfix::abstract_program;
use lenient::corpus::synth::{generate_file, TemplateSet};
use lenient::corpus::{fragmentize, load_source};
use minijava::{
    abstract_literals, derive_types, deserialize, is_primitive_type, must_tokenize, parse,
    qualify, render, serialize_forest, tag_sequence, tokenize, unparse, ParseMode, Token,
    TokenKind,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(n: u64, seed: u64) -> Vec<String> {
    let t = TemplateSet::default();
    (0..n).map(|i| generate_file(&t, seed, i)).collect()
}

#[test]
fn unparse_parse_round_trip() {
    for (i, src) in corpus(300, 9001).iter().enumerate() {
        let tokens = must_tokenize(src);
        let ast = parse(&tokens, ParseMode::File).unwrap_or_else(|e| panic!("file {i}: {e}"));
        assert_eq!(unparse(&ast, false).unwrap(), render(&tokens), "file {i}");
    }
}

#[test]
fn serialize_deserialize_identity_on_random_trees() {
    let mut checked = 0;
    for (i, src) in corpus(260, 9002).iter().enumerate() {
        let file = load_source(src).unwrap();
        for frag in fragmentize(&file, i, 5) {
            let forest =
                minijava::reinsert_tokens(&frag.golden, &frag.tokens).expect("reinsert");
            let unbound = deserialize(&frag.golden).expect("deserialize");
            assert_eq!(serialize_forest(&unbound), frag.golden);
            assert_eq!(serialize_forest(&forest), frag.golden);
            checked += 1;
        }
    }
    assert!(checked >= 1000, "only {checked} trees checked");
}

#[test]
fn abstract_literals_idempotent_and_length_preserving() {
    for (i, src) in corpus(250, 9003).iter().enumerate() {
        let tokens = must_tokenize(src);
        let once = abstract_literals(&tokens);
        assert_eq!(once.len(), tokens.len(), "file {i}");
        let twice = abstract_literals(&once);
        assert_eq!(render(&twice), render(&once), "file {i}");
    }
}

#[test]
fn abstraction_spans_reconstruct_the_input() {
    for (i, src) in corpus(300, 9004).iter().enumerate() {
        let tokens = must_tokenize(src);
        let abs = abstract_program(&tokens);
        let mut covered = 0usize;
        for &(s, e) in &abs.spans {
            assert_eq!(s, covered, "file {i}: span gap");
            covered = e;
        }
        assert_eq!(covered, tokens.len(), "file {i}: spans must cover");
        // And on arbitrary mutated token streams too.
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let mut broken: Vec<Token> = tokens.clone();
        if !broken.is_empty() {
            broken.remove(rng.gen_range(0..broken.len()));
        }
        let abs = abstract_program(&broken);
        let covered: usize = abs.spans.iter().map(|&(s, e)| e - s).sum();
        assert_eq!(covered, broken.len(), "file {i}: lossless on malformed input");
    }
}

// ---- independent type resolver -------------------------------------------------

/// Token-level scope walker: a second, deliberately naive route to declared
/// types. Tracks brace depth, recognizes `Type name` declaration heads,
/// scopes fields per class and params/locals per block.
fn naive_types(tokens: &[Token]) -> Vec<String> {
    #[derive(Clone)]
    struct Decl {
        name: String,
        ty: String,
    }
    let text = |i: usize| tokens.get(i).map(|t| t.text.as_str()).unwrap_or("");
    let is_ident =
        |i: usize| tokens.get(i).map(|t| t.kind == TokenKind::Identifier).unwrap_or(false);

    // A type mention starting at i: primitive or identifier, optional
    // single-level generics, optional [] pairs. Returns (type string, next).
    let scan_type = |i: usize| -> Option<(String, usize)> {
        let mut j = i;
        let base = if is_primitive_type(text(j)) {
            let b = text(j).to_string();
            j += 1;
            b
        } else if is_ident(j) && text(j).chars().next().is_some_and(|c| c.is_uppercase()) {
            let b = qualify(text(j));
            j += 1;
            if text(j) == "<" {
                let mut depth = 1;
                j += 1;
                while depth > 0 && j < tokens.len() {
                    match text(j) {
                        "<" => depth += 1,
                        ">" => depth -= 1,
                        _ => {}
                    }
                    j += 1;
                }
            }
            b
        } else {
            return None;
        };
        let mut suffix = String::new();
        while text(j) == "[" && text(j + 1) == "]" {
            suffix.push_str("[]");
            j += 2;
        }
        Some((format!("{base}{suffix}"), j))
    };

    // First pass: fields per class-body depth (always depth 1 here).
    let mut fields: Vec<Decl> = Vec::new();
    {
        let mut depth = 0i64;
        let mut i = 0;
        while i < tokens.len() {
            match text(i) {
                "{" => depth += 1,
                "}" => depth -= 1,
                _ if depth == 1 => {
                    if let Some((ty, j)) = scan_type(i) {
                        if is_ident(j) && matches!(text(j + 1), "=" | ";" | ",") {
                            let mut brackets = 0;
                            let mut k = j + 1;
                            while text(k) == "[" && text(k + 1) == "]" {
                                brackets += 1;
                                k += 2;
                            }
                            fields.push(Decl {
                                name: text(j).to_string(),
                                ty: format!("{ty}{}", "[]".repeat(brackets)),
                            });
                        }
                    }
                }
                _ => {}
            }
            i += 1;
        }
    }

    let mut tags = vec!["~".to_string(); tokens.len()];
    let mut scopes: Vec<Vec<Decl>> = vec![fields.clone()];
    let mut pending: Vec<Decl> = Vec::new(); // params / for-inits awaiting `{`
    let mut i = 0usize;
    let resolve = |scopes: &[Vec<Decl>], pending: &[Decl], name: &str| -> Option<String> {
        pending
            .iter()
            .rev()
            .chain(scopes.iter().rev().flat_map(|s| s.iter().rev()))
            .find(|d| d.name == name)
            .map(|d| d.ty.clone())
    };
    while i < tokens.len() {
        match text(i) {
            "{" => {
                let mut scope = std::mem::take(&mut pending);
                if scopes.len() == 1 {
                    scope.extend(fields.clone());
                }
                scopes.push(scope);
                i += 1;
            }
            "}" => {
                scopes.pop();
                pending.clear();
                i += 1;
            }
            "." => {
                // a.b — the member b is unresolvable unless a is `this`
                if is_ident(i + 1) {
                    if i >= 1 && text(i - 1) == "this" {
                        if let Some(ty) = fields.iter().find(|d| d.name == text(i + 1)) {
                            tags[i + 1] = ty.ty.clone();
                        }
                    }
                    i += 2;
                } else {
                    i += 1;
                }
            }
            "class" | "extends" => i += 2, // skip the type name
            "new" => {
                // skip the created type mention
                if let Some((_, j)) = scan_type(i + 1) {
                    i = j;
                } else {
                    i += 1;
                }
            }
            _ => {
                if let Some((ty, j)) = scan_type(i) {
                    if is_ident(j) && matches!(text(j + 1), "=" | ";" | "," | ")" | "[") {
                        // declaration head: bind the name
                        let mut brackets = 0;
                        let mut k = j + 1;
                        while text(k) == "[" && text(k + 1) == "]" {
                            brackets += 1;
                            k += 2;
                        }
                        let full = format!("{ty}{}", "[]".repeat(brackets));
                        tags[j] = full.clone();
                        let decl = Decl { name: text(j).to_string(), ty: full };
                        // params and for-inits live in the upcoming block
                        let in_parens = {
                            let mut depth = 0i64;
                            for t in &tokens[..i] {
                                match t.text.as_str() {
                                    "(" => depth += 1,
                                    ")" => depth -= 1,
                                    _ => {}
                                }
                            }
                            depth > 0
                        };
                        if in_parens {
                            pending.push(decl);
                        } else {
                            scopes.last_mut().expect("scope").push(decl);
                        }
                        i = k;
                        continue;
                    }
                }
                if is_ident(i) && text(i + 1) != "(" {
                    if let Some(ty) = resolve(&scopes, &pending, text(i)) {
                        tags[i] = ty;
                    }
                }
                i += 1;
            }
        }
    }
    tags
}

#[test]
fn derive_types_agrees_with_naive_resolver() {
    let mut files_checked = 0;
    let mut positions = 0usize;
    let mut mismatches: HashMap<String, usize> = HashMap::new();
    for (i, src) in corpus(200, 9005).iter().enumerate() {
        let tokens = tokenize(src).unwrap();
        let ast = parse(&tokens, ParseMode::File).unwrap();
        let derived = tag_sequence(&derive_types(&ast), tokens.len());
        let naive = naive_types(&tokens);
        for (pos, (a, b)) in derived.iter().zip(&naive).enumerate() {
            positions += 1;
            if a != b {
                *mismatches
                    .entry(format!("file {i} pos {pos}: grammar={a} naive={b} tok={}", tokens[pos].text))
                    .or_insert(0) += 1;
            }
        }
        files_checked += 1;
    }
    assert_eq!(files_checked, 200);
    assert!(
        mismatches.is_empty(),
        "{} disagreements over {positions} positions; first: {:?}",
        mismatches.len(),
        mismatches.keys().next()
    );
}

#[test]
fn derive_types_binds_every_identifier_occurrence() {
    for (i, src) in corpus(120, 9006).iter().enumerate() {
        let tokens = must_tokenize(src);
        let ast = parse(&tokens, ParseMode::File).unwrap();
        let bindings = derive_types(&ast);
        let idents = tokens.iter().filter(|t| t.kind == TokenKind::Identifier).count();
        assert_eq!(bindings.len(), idents, "file {i}");
        for b in &bindings {
            assert_eq!(tokens[b.identifier_index].kind, TokenKind::Identifier, "file {i}");
        }
    }
}
