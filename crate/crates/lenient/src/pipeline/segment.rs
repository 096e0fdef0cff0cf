//! Segmentation: split a (brace-repaired) program into atomic statement
//! pieces at block delimiters, statement delimiters, and retained line
//! breaks.

use minijava::{Token, TokenKind};

use crate::blockfix::{abstract_program, AbsSym, RepairedSkeleton};
use crate::error::LenientError;

pub const SEGMENT_MAX: usize = 100;

#[derive(Debug, Clone)]
pub struct Segment {
    pub tokens: Vec<Token>,
    /// Order index among the program's segments.
    pub anchor: usize,
}

/// Builds the post-repair token stream: original tokens minus the braces the
/// repair dropped, plus synthetic tokens for the braces it inserted.
pub fn repaired_token_stream(tokens: &[Token], skeleton: &RepairedSkeleton) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len() + skeleton.inserted.len());
    for (si, sym) in skeleton.program.symbols.iter().enumerate() {
        let (s, e) = skeleton.program.spans[si];
        if s == e {
            // inserted brace
            let text = sym.as_text();
            let mut t = Token::new(text, TokenKind::Separator, out.len());
            t.newline_before = true;
            out.push(t);
        } else {
            for idx in s..e {
                let mut t = tokens[idx].clone();
                t.index = out.len();
                out.push(t);
            }
        }
    }
    out
}

/// Identity skeleton for already-balanced programs.
pub fn trivial_skeleton(tokens: &[Token]) -> RepairedSkeleton {
    RepairedSkeleton {
        program: abstract_program(tokens),
        dropped_tokens: Vec::new(),
        inserted: Vec::new(),
    }
}

/// True when a `{` at position `i` opens an array initializer rather than a
/// block: it follows `=`, `,` or `]`.
pub fn is_initializer_brace(tokens: &[Token], i: usize) -> bool {
    tokens[i].text == "{" && i > 0 && matches!(tokens[i - 1].text.as_str(), "=" | "," | "]")
}

/// Splits at `{`, `}`, depth-0 `;`, and depth-0 line breaks. Array
/// initializer braces are expression material, not block delimiters, and do
/// not cut. Every block brace ends its piece, so a segment carries at most
/// one brace, as its final token. Pieces are atomic: reassembly is the
/// in-order stitch of their trees.
pub fn segment(tokens: &[Token]) -> Result<Vec<Segment>, LenientError> {
    let mut segments = Vec::new();
    let mut start = 0usize;
    let mut paren_depth = 0i64;
    let mut init_depth = 0i64;
    for (i, t) in tokens.iter().enumerate() {
        if i > start && t.newline_before && paren_depth == 0 && init_depth == 0 {
            push_segment(&mut segments, &tokens[start..i])?;
            start = i;
        }
        match t.text.as_str() {
            "(" => paren_depth += 1,
            ")" => paren_depth = (paren_depth - 1).max(0),
            ";" if paren_depth == 0 && init_depth == 0 => {
                push_segment(&mut segments, &tokens[start..=i])?;
                start = i + 1;
            }
            "{" if init_depth > 0 || is_initializer_brace(tokens, i) => init_depth += 1,
            "}" if init_depth > 0 => init_depth -= 1,
            "{" | "}" => {
                paren_depth = 0;
                push_segment(&mut segments, &tokens[start..=i])?;
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < tokens.len() {
        push_segment(&mut segments, &tokens[start..])?;
    }
    Ok(segments)
}

fn push_segment(segments: &mut Vec<Segment>, slice: &[Token]) -> Result<(), LenientError> {
    if slice.is_empty() {
        return Ok(());
    }
    if slice.len() > SEGMENT_MAX {
        return Err(LenientError::SegmentTooLong(slice.len()));
    }
    let mut tokens = slice.to_vec();
    for (i, t) in tokens.iter_mut().enumerate() {
        t.index = i;
    }
    let anchor = segments.len();
    segments.push(Segment { tokens, anchor });
    Ok(())
}

/// Separates a segment's possible trailing brace from its content: a piece
/// like `if ( x ) {` is content plus an opener.
pub fn split_trailing_brace(seg: &Segment) -> (&[Token], Option<&Token>) {
    match seg.tokens.last() {
        Some(t) if t.text == "{" || t.text == "}" => {
            (&seg.tokens[..seg.tokens.len() - 1], Some(t))
        }
        _ => (&seg.tokens[..], None),
    }
}

pub use crate::blockfix::AbstractedProgram;

/// Convenience: abstraction symbols of a repaired stream (useful in tests).
pub fn skeleton_symbols(tokens: &[Token]) -> Vec<AbsSym> {
    abstract_program(tokens).symbols
}

#[cfg(test)]
mod tests {
    use super::*;
    use minijava::{must_tokenize, render};

    fn texts(segments: &[Segment]) -> Vec<String> {
        segments.iter().map(|s| render(&s.tokens)).collect()
    }

    #[test]
    fn splits_the_batch_example_lines() {
        // Line breaks recover statement boundaries when semicolons are missing.
        let src = "public class Batch {\npublic static String subjects = \"\"\npublic static void main ( String args [ ] ) {\nif ( subjects . length ( ) > 50 ) {\nSystem . out . println ( \"\" )\n}\n}\n}";
        let tokens = must_tokenize(src);
        let segs = segment(&tokens).unwrap();
        let t = texts(&segs);
        assert!(t.contains(&"public static String subjects = \"\"".to_string()), "{t:?}");
        assert!(t.contains(&"System . out . println ( \"\" )".to_string()), "{t:?}");
    }

    #[test]
    fn single_statement_is_one_segment() {
        let tokens = must_tokenize("int x = 0 ;");
        let segs = segment(&tokens).unwrap();
        assert_eq!(texts(&segs), vec!["int x = 0 ;"]);
    }

    #[test]
    fn for_header_semicolons_do_not_split() {
        let tokens = must_tokenize("for ( int i = 0 ; i < 12 ; i ++ ) {\nx = i ;\n}");
        let segs = segment(&tokens).unwrap();
        assert_eq!(
            texts(&segs),
            vec!["for ( int i = 0 ; i < 12 ; i ++ ) {", "x = i ;", "}"]
        );
    }

    #[test]
    fn segments_partition_the_stream() {
        let t = crate::corpus::synth::TemplateSet::default();
        for i in 0..50 {
            let src = crate::corpus::synth::generate_file(&t, 77, i);
            let tokens = must_tokenize(&src);
            let segs = segment(&tokens).unwrap();
            let total: usize = segs.iter().map(|s| s.tokens.len()).sum();
            assert_eq!(total, tokens.len(), "file {i}");
            let joined: Vec<String> =
                segs.iter().flat_map(|s| s.tokens.iter().map(|t| t.text.clone())).collect();
            let original: Vec<String> = tokens.iter().map(|t| t.text.clone()).collect();
            assert_eq!(joined, original, "file {i}");
        }
    }

    #[test]
    fn too_long_indivisible_segment_errors() {
        // one giant call with >100 tokens inside parens and no linebreaks
        let args: Vec<String> = (0..60).map(|i| format!("a{i}")).collect();
        let src = format!("f ( {} ) ;", args.join(" , "));
        let tokens = must_tokenize(&src);
        assert!(tokens.len() > SEGMENT_MAX);
        match segment(&tokens) {
            Err(LenientError::SegmentTooLong(_)) => {}
            other => panic!("expected SegmentTooLong, got {:?}", other.map(|s| s.len())),
        }
    }
}
