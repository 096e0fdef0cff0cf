//! Aligned training pairs for the three models.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use minijava::{derive_types, tag_sequence};

use super::{fragment_seed, fragmentize, CorpusFile, Fragment};
use crate::blockfix::abstract_program;
use crate::corruptor::{corrupt_blocks, corrupt_fragment, CorruptionConfig, MutationRecord};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    #[serde(default)]
    pub file: usize,
    #[serde(default)]
    pub start: usize,
    #[serde(default)]
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation: Option<MutationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPair {
    pub src: Vec<String>,
    pub tgt: Vec<String>,
    pub meta: PairMeta,
}

/// Fragment tokens paired with redeemed serialized trees; roughly half the
/// fragments carry a seeded mutation (the config's drop+insert mass).
pub fn make_parser_pairs(
    fragments: &[Fragment],
    cfg: &CorruptionConfig,
    seed: u64,
) -> Vec<TrainPair> {
    fragments
        .par_iter()
        .map(|frag| {
            let mut rng = ChaCha8Rng::seed_from_u64(fragment_seed(seed, frag.origin));
            let out = corrupt_fragment(frag, cfg, &mut rng);
            TrainPair {
                src: out.tokens.iter().map(|t| t.text.clone()).collect(),
                tgt: out.redeemed.to_text().split(' ').map(String::from).collect(),
                meta: PairMeta {
                    file: frag.origin.0,
                    start: frag.origin.1,
                    end: frag.origin.2,
                    mutation: out.mutation,
                },
            }
        })
        .collect()
}

/// Per-token type tags over uncorrupted fragments; |src| == |tgt| always.
pub fn make_typer_pairs(files: &[CorpusFile], seed: u64) -> Vec<TrainPair> {
    files
        .par_iter()
        .enumerate()
        .flat_map(|(file_id, file)| {
            let bindings = derive_types(&file.ast);
            let tags = tag_sequence(&bindings, file.tokens.len());
            fragmentize(file, file_id, seed ^ 0x7970)
                .into_iter()
                .map(|frag| {
                    let (_, start, end) = frag.origin;
                    TrainPair {
                        src: frag.tokens.iter().map(|t| t.text.clone()).collect(),
                        tgt: tags[start..end].to_vec(),
                        meta: PairMeta { file: file_id, start, end, mutation: None },
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Corrupted/original skeleton pairs for BlockFix; every example is noised
/// (half insertions, half deletions).
pub fn make_blockfix_pairs(files: &[CorpusFile], seed: u64) -> Vec<TrainPair> {
    files
        .par_iter()
        .enumerate()
        .filter_map(|(file_id, file)| {
            let abs = abstract_program(&file.tokens);
            if abs.symbols.is_empty() || abs.symbols.len() > crate::blockfix::MAX_ABSTRACT_LEN {
                return None;
            }
            let mut rng =
                ChaCha8Rng::seed_from_u64(fragment_seed(seed ^ 0xb10c, (file_id, 0, 0)));
            let (corrupted, original) = corrupt_blocks(&abs.symbols, &mut rng);
            Some(TrainPair {
                src: corrupted.iter().map(|s| s.as_text().to_string()).collect(),
                tgt: original.iter().map(|s| s.as_text().to_string()).collect(),
                meta: PairMeta { file: file_id, start: 0, end: file.tokens.len(), mutation: None },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synth::{generate_file, TemplateSet};
    use crate::corpus::{load_source, FRAGMENT_MAX};

    fn corpus(n: u64, seed: u64) -> Vec<CorpusFile> {
        let t = TemplateSet::default();
        (0..n).map(|i| load_source(&generate_file(&t, seed, i)).unwrap()).collect()
    }

    fn all_fragments(files: &[CorpusFile], seed: u64) -> Vec<Fragment> {
        files
            .iter()
            .enumerate()
            .flat_map(|(i, f)| fragmentize(f, i, seed))
            .collect()
    }

    #[test]
    fn mutation_fraction_zero_keeps_targets_clean() {
        let files = corpus(10, 40);
        let frags = all_fragments(&files, 3);
        let cfg = CorruptionConfig {
            drop_fraction: 0.0,
            insert_fraction: 0.0,
            ..CorruptionConfig::default()
        };
        let pairs = make_parser_pairs(&frags, &cfg, 9);
        for p in &pairs {
            assert!(p.meta.mutation.is_none());
            assert!(!p.tgt.iter().any(|s| s.contains("Missing") || s.contains("Extra")));
        }
    }

    #[test]
    fn mutated_share_is_binomially_plausible() {
        let files = corpus(250, 41);
        let frags = all_fragments(&files, 4);
        assert!(frags.len() > 1_000, "need a large sample, got {}", frags.len());
        let pairs = make_parser_pairs(&frags, &CorruptionConfig::default(), 10);
        let mutated = pairs.iter().filter(|p| p.meta.mutation.is_some()).count();
        let share = mutated as f64 / pairs.len() as f64;
        assert!(
            (share - 0.5).abs() < 0.05,
            "mutated share {share} should be near 0.5 over {} pairs",
            pairs.len()
        );
        // Every mutated pair's target carries at least one marker.
        for p in pairs.iter().filter(|p| p.meta.mutation.is_some()) {
            assert!(p.tgt.iter().any(|s| s.starts_with("Missing") || s == "ExtraPunctuation"));
        }
    }

    #[test]
    fn typer_pairs_align_lengths() {
        let files = corpus(15, 42);
        let pairs = make_typer_pairs(&files, 5);
        assert!(!pairs.is_empty());
        for p in &pairs {
            assert_eq!(p.src.len(), p.tgt.len());
            assert!(p.src.len() <= FRAGMENT_MAX);
        }
        // The corpus declares typed variables, so real tags appear.
        assert!(pairs.iter().any(|p| p.tgt.iter().any(|t| t != "~")));
    }

    #[test]
    fn typer_tags_match_the_boxed_example() {
        let file = load_source(
            "class C { boolean something ; void m ( ) { \
             if ( something ) { Object o = new Object ( ) ; } } }",
        )
        .unwrap();
        let bindings = derive_types(&file.ast);
        let tags = tag_sequence(&bindings, file.tokens.len());
        assert_eq!(
            tags[11..25].join(" "),
            "~ ~ boolean ~ ~ ~ java.lang.Object ~ ~ ~ ~ ~ ~ ~"
        );
    }

    #[test]
    fn blockfix_pairs_are_all_noised() {
        let files = corpus(30, 43);
        let pairs = make_blockfix_pairs(&files, 6);
        assert_eq!(pairs.len(), 30);
        for p in &pairs {
            assert_ne!(p.src, p.tgt, "every blockfix example carries a brace edit");
            assert!((p.src.len() as i64 - p.tgt.len() as i64).abs() == 1);
        }
    }

    #[test]
    fn pair_generation_is_deterministic_and_order_free() {
        let files = corpus(20, 44);
        let frags = all_fragments(&files, 7);
        let a = make_parser_pairs(&frags, &CorruptionConfig::default(), 11);
        let b = make_parser_pairs(&frags, &CorruptionConfig::default(), 11);
        assert_eq!(a, b);
        // Per-fragment seeds: corruption of a fragment does not depend on
        // the batch it rides in.
        let solo = make_parser_pairs(&frags[3..4], &CorruptionConfig::default(), 11);
        assert_eq!(solo[0], a[3]);
    }
}
