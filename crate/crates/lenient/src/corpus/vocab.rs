//! Frequency-cutoff vocabulary construction over training pairs.

use std::collections::HashMap;

use seqmodel::Vocab;

use super::pairs::TrainPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Src,
    Tgt,
}

/// Frequency-ranked vocabulary: symbols occurring at least `cutoff` times,
/// ordered by descending frequency then lexicographically.
pub fn build_vocab(pairs: &[TrainPair], side: Side, cutoff: usize) -> Vocab {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for p in pairs {
        let seq = match side {
            Side::Src => &p.src,
            Side::Tgt => &p.tgt,
        };
        for sym in seq {
            *counts.entry(sym.as_str()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> =
        counts.into_iter().filter(|&(_, c)| c >= cutoff).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Vocab::new(entries.into_iter().map(|(s, _)| s.to_string()).collect(), cutoff)
}
