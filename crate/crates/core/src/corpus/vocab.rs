//! Word vocabulary with 1-of-K encoding and reserved tokens.

use super::token::tokenize;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const START: usize = 0;
pub const END: usize = 1;
pub const UNK: usize = 2;

pub const START_SURFACE: &str = "<s>";
pub const END_SURFACE: &str = "</s>";
pub const UNK_SURFACE: &str = "<unk>";

/// A word sequence as vocabulary indices.
pub type Sentence = Vec<usize>;

/// Bidirectional word <-> id map. Ids 0..3 are reserved for START, END and
/// UNK; the tokenizer never emits their surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary { words, index }
    }

    /// Rebuild the reverse index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    /// Builds a vocabulary over every word with corpus frequency >=
    /// `min_count`. Ids: reserved first, then words by descending
    /// frequency, ties broken lexicographically.
    pub fn build(corpus: &[String], min_count: usize) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::invalid("min_count must be >= 1"));
        }
        let mut freq: HashMap<String, usize> = HashMap::new();
        for text in corpus {
            for tok in tokenize(text) {
                *freq.entry(tok).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = freq
            .into_iter()
            .filter(|(_, n)| *n >= min_count)
            .collect();
        kept.sort_by(|(wa, na), (wb, nb)| nb.cmp(na).then_with(|| wa.cmp(wb)));

        let mut words = vec![
            START_SURFACE.to_string(),
            END_SURFACE.to_string(),
            UNK_SURFACE.to_string(),
        ];
        words.extend(kept.into_iter().map(|(w, _)| w));
        Ok(Vocabulary::from_words(words))
    }

    pub fn size(&self) -> usize {
        self.words.len()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn encode_words(&self, words: &[String]) -> Sentence {
        words.iter().map(|w| self.id(w)).collect()
    }

    pub fn encode_text(&self, text: &str) -> Sentence {
        tokenize(text).iter().map(|w| self.id(w)).collect()
    }

    pub fn decode(&self, sentence: &[usize]) -> Vec<String> {
        sentence.iter().map(|&id| self.words[id].clone()).collect()
    }

    /// Single-space-joined lowercase surface string.
    pub fn surface(&self, sentence: &[usize]) -> String {
        sentence
            .iter()
            .map(|&id| self.words[id].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}
