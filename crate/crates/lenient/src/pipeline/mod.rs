//! The full repair pipeline: balance check, BlockFix when braces are
//! unbalanced, segmentation, per-segment lenient parsing, candidate
//! combination, reassembly, and repaired-code generation — plus the
//! short-fragment fast path.

pub mod assemble;
pub mod segment;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use minijava::{render, reparse_fragment, serialize_forest, unparse_tokens, Ast, Token};
use seqmodel::Checkpoint;

use crate::blockfix::{abstract_program, blockfix_repair, braces_balanced};
use crate::error::LenientError;
use crate::tresparser::{candidate_forest, parse_leniently, RepairCandidate};

use assemble::assemble;
use segment::{repaired_token_stream, segment, trivial_skeleton, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitKind {
    Ast,
    Code,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Fragments at or below this length go straight to the lenient parser.
    pub short_fragment_threshold: usize,
    pub beam_k: usize,
    /// When set (the default), balanced programs bypass BlockFix entirely.
    pub skip_blockfix_when_balanced: bool,
    pub emit: EmitKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            short_fragment_threshold: 40,
            beam_k: 5,
            skip_blockfix_when_balanced: true,
            emit: EmitKind::Both,
        }
    }
}

/// The trained models the pipeline drives. BlockFix is optional so its
/// contribution can be ablated.
pub struct Models<'a> {
    pub blockfix: Option<&'a Checkpoint<f32>>,
    pub tresparser: &'a Checkpoint<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailStage {
    BlockfixFailed,
    SegmentTooLong,
    NoValidCandidate,
}

#[derive(Debug, Clone)]
pub struct ProgramCandidate {
    pub tokens: Vec<Token>,
    pub ast: Ast,
    pub score: f64,
    /// Sum of single-token edits across segments (0 for clean input).
    pub edit_count: usize,
}

#[derive(Debug)]
pub enum RepairOutcome {
    Fixed { candidates: Vec<ProgramCandidate>, timing_ms: f64 },
    NotFixable { stage: FailStage, timing_ms: f64 },
}

enum SegmentParse {
    /// Strict-parseable piece: exactly one tree, no fan-out.
    Clean(Vec<Ast>),
    /// Erroneous piece: ranked valid candidates.
    Candidates(Vec<(RepairCandidate, Vec<Ast>)>),
}

/// Executes the full pipeline on a program: counter balance check, BlockFix
/// only if unbalanced, segmentation, per-segment lenient parsing (clean
/// segments keep their unique parse), global candidate combination by
/// summed log-score capped at top-5, reassembly, and repair application.
/// Every emitted candidate strict-parses.
pub fn repair_program(
    program: &[Token],
    models: &Models<'_>,
    config: &PipelineConfig,
) -> RepairOutcome {
    let start = Instant::now();
    let ms = |s: &Instant| s.elapsed().as_secs_f64() * 1000.0;

    // Stage 1: brace balance and BlockFix.
    let balanced = braces_balanced(program);
    let skeleton = if balanced && config.skip_blockfix_when_balanced {
        trivial_skeleton(program)
    } else {
        match models.blockfix {
            Some(ckpt) => {
                let abs = abstract_program(program);
                match blockfix_repair(ckpt, &abs, config.beam_k) {
                    Ok(repaired) => {
                        let stream = repaired_token_stream(program, &repaired);
                        return repair_segments_stage(program, &stream, models, config, start);
                    }
                    Err(_) => {
                        return RepairOutcome::NotFixable {
                            stage: FailStage::BlockfixFailed,
                            timing_ms: ms(&start),
                        }
                    }
                }
            }
            None => trivial_skeleton(program),
        }
    };
    let stream = repaired_token_stream(program, &skeleton);
    repair_segments_stage(program, &stream, models, config, start)
}

fn repair_segments_stage(
    _original: &[Token],
    stream: &[Token],
    models: &Models<'_>,
    config: &PipelineConfig,
    start: Instant,
) -> RepairOutcome {
    let ms = |s: &Instant| s.elapsed().as_secs_f64() * 1000.0;
    let segments = match segment(stream) {
        Ok(s) => s,
        Err(_) => {
            return RepairOutcome::NotFixable {
                stage: FailStage::SegmentTooLong,
                timing_ms: ms(&start),
            }
        }
    };

    // Stage 2: per-segment parses.
    let mut parses: Vec<SegmentParse> = Vec::with_capacity(segments.len());
    for seg in &segments {
        match parse_segment(seg, models, config) {
            Some(p) => parses.push(p),
            None => {
                return RepairOutcome::NotFixable {
                    stage: FailStage::NoValidCandidate,
                    timing_ms: ms(&start),
                }
            }
        }
    }

    // Stage 3: combine per-segment candidate lists into global candidates by
    // summed log-score, deterministic ties broken by earlier-segment rank.
    let mut combos: Vec<(f64, Vec<usize>)> = vec![(0.0, Vec::new())];
    for parse in &parses {
        match parse {
            SegmentParse::Clean(_) => {
                for combo in &mut combos {
                    combo.1.push(0);
                }
            }
            SegmentParse::Candidates(cands) => {
                let mut next = Vec::with_capacity(combos.len() * cands.len());
                for (score, picks) in &combos {
                    for (ci, (cand, _)) in cands.iter().enumerate() {
                        let mut picks = picks.clone();
                        picks.push(ci);
                        next.push((score + cand.score, picks));
                    }
                }
                next.sort_by(|a, b| {
                    b.0.partial_cmp(&a.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                });
                next.truncate(5);
                combos = next;
            }
        }
    }

    // Stage 4: assemble each combination and keep the ones whose repaired
    // code strict-parses.
    let mut candidates = Vec::new();
    for (score, picks) in combos {
        let mut forests = Vec::with_capacity(parses.len());
        let mut edit_count = 0usize;
        for (parse, &pick) in parses.iter().zip(&picks) {
            match parse {
                SegmentParse::Clean(forest) => forests.push(forest.clone()),
                SegmentParse::Candidates(cands) => {
                    let (cand, forest) = &cands[pick];
                    edit_count += cand.edits.len();
                    forests.push(forest.clone());
                }
            }
        }
        let Ok(ast) = assemble(forests) else { continue };
        let Ok(mut tokens) = unparse_tokens(std::slice::from_ref(&ast), true) else { continue };
        for (i, t) in tokens.iter_mut().enumerate() {
            t.index = i;
        }
        if reparse_fragment(&tokens).is_none() {
            continue;
        }
        candidates.push(ProgramCandidate { tokens, ast, score, edit_count });
    }
    if candidates.is_empty() {
        return RepairOutcome::NotFixable {
            stage: FailStage::NoValidCandidate,
            timing_ms: ms(&start),
        };
    }
    RepairOutcome::Fixed { candidates, timing_ms: ms(&start) }
}

fn parse_segment(
    seg: &Segment,
    models: &Models<'_>,
    config: &PipelineConfig,
) -> Option<SegmentParse> {
    if let Some(forest) = reparse_fragment(&seg.tokens) {
        return Some(SegmentParse::Clean(forest));
    }
    let cands = parse_leniently(models.tresparser, &seg.tokens, config.beam_k).ok()?;
    let valid: Vec<(RepairCandidate, Vec<Ast>)> = cands
        .into_iter()
        .filter(|c| c.valid)
        .filter_map(|c| {
            let forest = candidate_forest(&seg.tokens, &c).ok()?;
            Some((c, forest))
        })
        .collect();
    if valid.is_empty() {
        None
    } else {
        Some(SegmentParse::Candidates(valid))
    }
}

/// Fragment entry point: short fragments skip BlockFix and segmentation
/// entirely; longer inputs take the full pipeline. Returns the rank-1 tree.
pub fn parse_fragment_pipeline(
    fragment: &[Token],
    models: &Models<'_>,
    config: &PipelineConfig,
) -> Result<Ast, LenientError> {
    if fragment.len() <= config.short_fragment_threshold {
        if let Some(forest) = reparse_fragment(fragment) {
            return Ok(into_unit(forest));
        }
        let cands = parse_leniently(models.tresparser, fragment, config.beam_k)?;
        let best = cands
            .iter()
            .find(|c| c.valid)
            .ok_or(LenientError::NotFixable { stage: "no-valid-candidate" })?;
        let forest = candidate_forest(fragment, best)?;
        return Ok(into_unit(forest));
    }
    match repair_program(fragment, models, config) {
        RepairOutcome::Fixed { candidates, .. } => {
            Ok(candidates.into_iter().next().expect("nonempty").ast)
        }
        RepairOutcome::NotFixable { stage, .. } => Err(LenientError::NotFixable {
            stage: match stage {
                FailStage::BlockfixFailed => "blockfix-failed",
                FailStage::SegmentTooLong => "segment-too-long",
                FailStage::NoValidCandidate => "no-valid-candidate",
            },
        }),
    }
}

fn into_unit(mut forest: Vec<Ast>) -> Ast {
    if forest.len() == 1 {
        forest.pop().expect("checked")
    } else {
        Ast::node(minijava::Label::CompilationUnit, forest)
    }
}

/// JSON shape of the `repair` CLI output.
#[derive(Debug, Serialize)]
pub struct RepairReport {
    pub status: &'static str,
    pub candidates: Vec<CandidateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<FailStage>,
    pub timing_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct CandidateReport {
    pub rank: usize,
    pub code: String,
    pub ast_labels: Vec<String>,
    pub edits: usize,
    pub score: f64,
}

impl RepairReport {
    pub fn from_outcome(outcome: &RepairOutcome) -> RepairReport {
        match outcome {
            RepairOutcome::Fixed { candidates, timing_ms } => RepairReport {
                status: "fixed",
                candidates: candidates
                    .iter()
                    .enumerate()
                    .map(|(i, c)| CandidateReport {
                        rank: i + 1,
                        code: render(&c.tokens),
                        ast_labels: serialize_forest(std::slice::from_ref(&c.ast))
                            .label_texts()
                            .iter()
                            .map(|s| s.to_string())
                            .collect(),
                        edits: c.edit_count,
                        score: c.score,
                    })
                    .collect(),
                stage: None,
                timing_ms: *timing_ms,
            },
            RepairOutcome::NotFixable { stage, timing_ms } => RepairReport {
                status: "not-fixable",
                candidates: Vec::new(),
                stage: Some(*stage),
                timing_ms: *timing_ms,
            },
        }
    }
}
