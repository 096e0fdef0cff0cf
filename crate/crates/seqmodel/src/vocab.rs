//! Symbol vocabulary with reserved special ids.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const UNK: u32 = 0;
pub const PAD: u32 = 1;
pub const BOS: u32 = 2;
pub const EOS: u32 = 3;
pub const SPECIALS: [&str; 4] = ["<unk>", "<pad>", "<bos>", "<eos>"];

/// Frequency-cut vocabulary. Ids 0..4 are the specials; entry i sits at id
/// `i + 4`. Lookup of an unseen symbol yields UNK, never an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub entries: Vec<String>,
    pub cutoff: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new(entries: Vec<String>, cutoff: usize) -> Self {
        let mut v = Vocab { entries, cutoff, index: HashMap::new() };
        v.rebuild_index();
        v
    }

    pub fn rebuild_index(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32 + SPECIALS.len() as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.entries.len() + SPECIALS.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, symbol: &str) -> u32 {
        self.index.get(symbol).copied().unwrap_or(UNK)
    }

    pub fn symbol(&self, id: u32) -> &str {
        let id = id as usize;
        if id < SPECIALS.len() {
            SPECIALS[id]
        } else {
            self.entries.get(id - SPECIALS.len()).map(String::as_str).unwrap_or(SPECIALS[0])
        }
    }

    pub fn encode(&self, symbols: &[String]) -> Vec<u32> {
        symbols.iter().map(|s| self.id(s)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.symbol(i).to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_maps_to_unk() {
        let v = Vocab::new(vec!["a".into(), "b".into()], 1);
        assert_eq!(v.id("a"), 4);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(v.symbol(5), "b");
        assert_eq!(v.symbol(999), "<unk>");
    }
}
