//! Metrics and baselines: exact match, MRR, top-k, the 4-class tree
//! categorization with trailing-paren autofix, declaration-kind-lenient
//! comparison, Wald confidence intervals, length-bucketed reports,
//! wrap-and-parse baseline runs, and multi-tool blending.

use serde::{Deserialize, Serialize};

use minijava::{wrap_and_parse, Ast, Label, SerialSym, SerializedAst, Token};

use crate::error::LenientError;

/// Mean reciprocal rank: mean over items of 1/rank, absent counting zero.
pub fn mrr(ranked_hits: &[Option<usize>]) -> Result<f64, LenientError> {
    if ranked_hits.is_empty() {
        return Err(LenientError::EmptyInput);
    }
    let sum: f64 = ranked_hits
        .iter()
        .map(|r| match r {
            Some(rank) => {
                assert!(*rank >= 1, "ranks are 1-based");
                1.0 / *rank as f64
            }
            None => 0.0,
        })
        .sum();
    Ok(sum / ranked_hits.len() as f64)
}

fn lenient_sym(sym: SerialSym) -> SerialSym {
    // Field vs. local declaration is indistinguishable out of context.
    match sym {
        SerialSym::Label(Label::FieldDeclaration) => {
            SerialSym::Label(Label::VariableDeclarationStatement)
        }
        other => other,
    }
}

/// Canonical text with declaration kinds merged, for lenient comparisons.
pub fn canonical_decl_text(s: &SerializedAst) -> String {
    s.symbols.iter().map(|&sym| lenient_sym(sym).as_str()).collect::<Vec<_>>().join(" ")
}

/// Equality up to the field-declaration / variable-declaration distinction.
pub fn compare_lenient(a: &SerializedAst, b: &SerializedAst) -> bool {
    a.symbols.len() == b.symbols.len()
        && a.symbols
            .iter()
            .zip(&b.symbols)
            .all(|(&x, &y)| lenient_sym(x) == lenient_sym(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Correct,
    Autofixed,
    Partial,
    Incorrect,
}

/// Balances a label stream by touching only the very end: strips any
/// trailing run of close-parens, then appends exactly the number needed.
/// Returns None when the stream is broken elsewhere (negative depth inside).
fn autofix_trailing(symbols: &[SerialSym]) -> Option<Vec<SerialSym>> {
    let mut core = symbols.len();
    while core > 0 && symbols[core - 1] == SerialSym::Close {
        core -= 1;
    }
    let core = &symbols[..core];
    let mut depth = 0i64;
    for s in core {
        match s {
            SerialSym::Open => depth += 1,
            SerialSym::Close => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    let mut fixed = core.to_vec();
    for _ in 0..depth {
        fixed.push(SerialSym::Close);
    }
    Some(fixed)
}

/// 4-class output categorization: Correct on lenient equality; Autofixed
/// when only trailing close-parens need adding or removing; Partial when the
/// top-level node matches; Incorrect otherwise.
pub fn categorize(predicted: &SerializedAst, golden: &SerializedAst) -> Category {
    if compare_lenient(predicted, golden) {
        return Category::Correct;
    }
    if let Some(fixed) = autofix_trailing(&predicted.symbols) {
        if compare_lenient(&SerializedAst { symbols: fixed }, golden) {
            return Category::Autofixed;
        }
    }
    let root = |s: &SerializedAst| s.symbols.get(1).copied().map(lenient_sym);
    if root(predicted).is_some() && root(predicted) == root(golden) {
        return Category::Partial;
    }
    Category::Incorrect
}

/// 95% Wald binomial interval half-width.
pub fn wald_half_width(successes: usize, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let p = successes as f64 / n as f64;
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketRow {
    pub range: (usize, usize),
    pub n: usize,
    pub top1: f64,
    /// 95% Wald interval half-width; NaN-free: None marks an empty bucket.
    pub ci: Option<f64>,
    pub mrr: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub correct: usize,
    pub autofixed: usize,
    pub partial: usize,
    pub incorrect: usize,
}

impl CategoryCounts {
    pub fn add(&mut self, c: Category) {
        match c {
            Category::Correct => self.correct += 1,
            Category::Autofixed => self.autofixed += 1,
            Category::Partial => self.partial += 1,
            Category::Incorrect => self.incorrect += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.correct + self.autofixed + self.partial + self.incorrect
    }
}

/// One evaluated item: its input length, the 1-based rank of the golden
/// answer among the candidates (None = miss), and wall-clock latency.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalItem {
    pub len: usize,
    pub rank: Option<usize>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub exact_match: f64,
    pub mrr: f64,
    pub topk: Vec<(usize, f64)>,
    pub categories: CategoryCounts,
    pub by_length_bucket: Vec<BucketRow>,
    pub median_latency_ms: f64,
}

/// Aggregates per-item results into per-bucket top-1 rates with Wald
/// intervals; `bucket_edges` are inclusive upper bounds.
pub fn bucket_report(
    items: &[EvalItem],
    bucket_edges: &[usize],
    categories: CategoryCounts,
) -> EvalReport {
    let n = items.len();
    let top1_hits = items.iter().filter(|i| i.rank == Some(1)).count();
    let ranks: Vec<Option<usize>> = items.iter().map(|i| i.rank).collect();
    let overall_mrr = if n == 0 { 0.0 } else { mrr(&ranks).unwrap_or(0.0) };
    let mut topk = Vec::new();
    for k in [1usize, 5] {
        let hits = items.iter().filter(|i| i.rank.is_some_and(|r| r <= k)).count();
        topk.push((k, if n == 0 { 0.0 } else { hits as f64 / n as f64 }));
    }

    let mut rows = Vec::new();
    let mut lo = 1usize;
    for &hi in bucket_edges {
        let bucket: Vec<&EvalItem> =
            items.iter().filter(|i| i.len >= lo && i.len <= hi).collect();
        let bn = bucket.len();
        let hits = bucket.iter().filter(|i| i.rank == Some(1)).count();
        let bucket_ranks: Vec<Option<usize>> = bucket.iter().map(|i| i.rank).collect();
        rows.push(BucketRow {
            range: (lo, hi),
            n: bn,
            top1: if bn == 0 { 0.0 } else { hits as f64 / bn as f64 },
            ci: if bn == 0 { None } else { Some(wald_half_width(hits, bn)) },
            mrr: if bn == 0 { 0.0 } else { mrr(&bucket_ranks).unwrap_or(0.0) },
        });
        lo = hi + 1;
    }

    let mut latencies: Vec<f64> = items.iter().map(|i| i.latency_ms).collect();
    latencies.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let median = if latencies.is_empty() {
        0.0
    } else {
        latencies[latencies.len() / 2]
    };

    EvalReport {
        n,
        exact_match: if n == 0 { 0.0 } else { top1_hits as f64 / n as f64 },
        mrr: overall_mrr,
        topk,
        categories,
        by_length_bucket: rows,
        median_latency_ms: median,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineOutcome {
    pub parsed: bool,
    #[serde(skip)]
    pub ast: Option<Ast>,
}

/// Wrap-and-parse over a set of fragments; failures flow onward for hybrid
/// scoring.
pub fn run_baseline_wrap_and_parse(fragments: &[Vec<Token>]) -> Vec<BaselineOutcome> {
    fragments
        .iter()
        .map(|frag| {
            let ast = wrap_and_parse(frag);
            BaselineOutcome { parsed: ast.is_some(), ast }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlendOutcome {
    pub solved: bool,
    pub solving_tool: Option<String>,
}

/// Solved iff any tool's candidate list contains the golden fix; the first
/// tool in the given priority order wins attribution.
pub fn blend(per_tool_candidates: &[(String, Vec<Vec<String>>)], golden: &[String]) -> BlendOutcome {
    for (tool, candidates) in per_tool_candidates {
        if candidates.iter().any(|c| c.iter().eq(golden.iter())) {
            return BlendOutcome { solved: true, solving_tool: Some(tool.clone()) };
        }
    }
    BlendOutcome { solved: false, solving_tool: None }
}
