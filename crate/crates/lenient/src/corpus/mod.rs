//! Corpus handling: ingest a directory of Mini-Java files (or generate a
//! synthetic corpus), extract deduplicated fragments with their golden
//! serialized trees, and build vocabularies and training pairs.

pub mod pairs;
pub mod synth;
pub mod vocab;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use minijava::{
    abstract_literals, parse, render, restrict, serialize_forest, tokenize, Ast, ParseMode,
    SerializedAst, Token,
};

use crate::error::LenientError;

/// Hard file-size ceiling, exclusive.
pub const FILE_TOKEN_LIMIT: usize = 10_000;
/// Training fragment length bounds, inclusive.
pub const FRAGMENT_MIN: usize = 5;
pub const FRAGMENT_MAX: usize = 100;

#[derive(Debug, Clone)]
pub struct CorpusIndex {
    pub files: Vec<(PathBuf, usize)>,
    pub total_tokens: usize,
    pub skipped: Vec<(PathBuf, String)>,
}

/// A parsed corpus file kept in memory.
pub struct CorpusFile {
    pub tokens: Vec<Token>,
    pub ast: Ast,
}

/// Indexes all strict-parseable files under `root` with the given extension
/// that stay below the token limit; unparseable or oversized files are
/// recorded as skipped.
pub fn ingest(root: &Path, extension: &str) -> Result<CorpusIndex, LenientError> {
    let mut paths: Vec<PathBuf> = Vec::new();
    collect_files(root, extension, &mut paths)?;
    paths.sort();
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    let mut total = 0usize;
    for path in paths {
        let source = std::fs::read_to_string(&path)?;
        match check_file(&source) {
            Ok(count) => {
                total += count;
                files.push((path, count));
            }
            Err(reason) => skipped.push((path, reason)),
        }
    }
    if files.is_empty() {
        return Err(LenientError::EmptyCorpus);
    }
    Ok(CorpusIndex { files, total_tokens: total, skipped })
}

fn collect_files(dir: &Path, extension: &str, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, extension, out)?;
        } else if path.extension().and_then(|e| e.to_str()) == Some(extension) {
            out.push(path);
        }
    }
    Ok(())
}

fn check_file(source: &str) -> Result<usize, String> {
    let tokens = tokenize(source).map_err(|e| e.to_string())?;
    if tokens.len() >= FILE_TOKEN_LIMIT {
        return Err(format!("{} tokens (limit {FILE_TOKEN_LIMIT})", tokens.len()));
    }
    parse(&tokens, ParseMode::File).map_err(|e| e.to_string())?;
    Ok(tokens.len())
}

/// Parses a source string into a corpus file.
pub fn load_source(source: &str) -> Result<CorpusFile, LenientError> {
    let tokens = tokenize(source).map_err(LenientError::Lex)?;
    let ast = parse(&tokens, ParseMode::File).map_err(LenientError::Syntax)?;
    Ok(CorpusFile { tokens, ast })
}

pub fn load_index(index: &CorpusIndex) -> Result<Vec<CorpusFile>, LenientError> {
    index
        .files
        .iter()
        .map(|(path, _)| {
            let source = std::fs::read_to_string(path)?;
            load_source(&source)
        })
        .collect()
}

/// A token run cut from a file at statement/block boundaries, paired with
/// its golden serialized tree (the restriction of the file AST).
#[derive(Debug, Clone)]
pub struct Fragment {
    /// Literal-abstracted tokens, reindexed from zero.
    pub tokens: Vec<Token>,
    /// (file id, start index, end index) in the source file.
    pub origin: (usize, usize, usize),
    pub golden: SerializedAst,
}

/// Cut positions: after each `;`, `{`, `}` at paren depth zero (for-header
/// semicolons are not statement boundaries, array-initializer braces are
/// not block delimiters).
fn cut_points(tokens: &[Token]) -> Vec<usize> {
    let mut cuts = Vec::new();
    let mut paren_depth = 0i64;
    let mut init_depth = 0i64;
    for (i, t) in tokens.iter().enumerate() {
        match t.text.as_str() {
            "(" => paren_depth += 1,
            ")" => paren_depth = (paren_depth - 1).max(0),
            ";" if paren_depth == 0 && init_depth == 0 => cuts.push(i + 1),
            "{" if init_depth > 0
                || crate::pipeline::segment::is_initializer_brace(tokens, i) =>
            {
                init_depth += 1
            }
            "}" if init_depth > 0 => init_depth -= 1,
            "{" | "}" => {
                paren_depth = 0;
                cuts.push(i + 1);
            }
            _ => {}
        }
    }
    if cuts.last() != Some(&tokens.len()) {
        cuts.push(tokens.len());
    }
    cuts
}

/// Splits a file into length-bounded fragments by accreting whole
/// statement/block pieces toward a uniformly sampled target length, then
/// deduplicates within the file by abstracted text.
pub fn fragmentize(file: &CorpusFile, file_id: usize, seed: u64) -> Vec<Fragment> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x6a09e667f3bcc909).wrapping_add(file_id as u64),
    );
    let tokens = &file.tokens;
    if tokens.len() < FRAGMENT_MIN {
        return Vec::new();
    }
    let cuts = cut_points(tokens);
    let mut bounds: Vec<usize> = vec![0];
    bounds.extend(cuts);
    bounds.dedup();

    let mut fragments = Vec::new();
    let mut seen = HashSet::new();
    let mut pos = 0usize; // index into bounds
    while pos + 1 < bounds.len() {
        let target = rng.gen_range(FRAGMENT_MIN..=FRAGMENT_MAX);
        let start = bounds[pos];
        let mut end_idx = pos;
        let mut len = 0usize;
        while end_idx + 1 < bounds.len() {
            let next_len = bounds[end_idx + 1] - start;
            if len >= FRAGMENT_MIN && next_len > FRAGMENT_MAX {
                break;
            }
            end_idx += 1;
            len = next_len;
            if len >= target {
                break;
            }
        }
        let end = bounds[end_idx];
        if (FRAGMENT_MIN..=FRAGMENT_MAX).contains(&len) {
            let mut frag_tokens = abstract_literals(&tokens[start..end]);
            for (i, t) in frag_tokens.iter_mut().enumerate() {
                t.index = i;
            }
            let key = render(&frag_tokens);
            if seen.insert(key) {
                let golden = serialize_forest(&restrict(&file.ast, start..end));
                fragments.push(Fragment {
                    tokens: frag_tokens,
                    origin: (file_id, start, end),
                    golden,
                });
            }
        }
        pos = end_idx.max(pos + 1);
    }
    fragments
}

/// Stable per-fragment seed, so corruption is reproducible and order-free.
pub fn fragment_seed(global: u64, origin: (usize, usize, usize)) -> u64 {
    let (f, s, e) = origin;
    global
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((f as u64).wrapping_mul(0xff51afd7ed558ccd))
        .wrapping_add((s as u64) << 20)
        .wrapping_add(e as u64)
}
