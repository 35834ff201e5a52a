//! Inverse document frequency over the question/caption corpus.

use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};

/// Raw-ratio IDF: `IDF(x) = |D| / df(x)` (no logarithm). Words absent from
/// the table resolve to the maximum tabled IDF.
#[derive(Debug, Clone)]
pub struct IdfTable {
    table: HashMap<String, f64>,
    max_idf: f64,
}

impl IdfTable {
    /// One document per sentence: each question and each caption counts as
    /// its own document.
    pub fn compute(documents: &[Vec<String>]) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::invalid("IDF needs at least one document"));
        }
        let n_docs = documents.len() as f64;
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in documents {
            let distinct: HashSet<&String> = doc.iter().collect();
            for word in distinct {
                *df.entry(word.clone()).or_insert(0) += 1;
            }
        }
        let table: HashMap<String, f64> = df
            .into_iter()
            .map(|(w, d)| (w, n_docs / d as f64))
            .collect();
        let max_idf = table.values().cloned().fold(1.0, f64::max);
        Ok(IdfTable { table, max_idf })
    }

    /// Uniform table (weight 1 for everything); reduces weighted averages
    /// to plain means.
    pub fn uniform() -> Self {
        IdfTable {
            table: HashMap::new(),
            max_idf: 1.0,
        }
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.table.get(word).copied().unwrap_or(self.max_idf)
    }

    pub fn max_weight(&self) -> f64 {
        self.max_idf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(texts: &[&str]) -> Vec<Vec<String>> {
        texts
            .iter()
            .map(|t| t.split(' ').map(String::from).collect())
            .collect()
    }

    #[test]
    fn word_in_all_documents_has_idf_one() {
        let t = IdfTable::compute(&docs(&["a b", "a c", "a d", "a e"])).unwrap();
        assert_eq!(t.weight("a"), 1.0);
    }

    #[test]
    fn word_in_one_of_four_documents_has_idf_four() {
        let t = IdfTable::compute(&docs(&["a b", "a c", "a d", "a e"])).unwrap();
        assert_eq!(t.weight("b"), 4.0);
    }

    #[test]
    fn absent_word_resolves_to_max_tabled_idf() {
        let t = IdfTable::compute(&docs(&["a b", "a c", "a d", "a e"])).unwrap();
        assert_eq!(t.weight("zebra"), 4.0);
    }

    #[test]
    fn repeated_word_in_one_document_counts_once() {
        let t = IdfTable::compute(&docs(&["a a a", "b"])).unwrap();
        assert_eq!(t.weight("a"), 2.0);
    }

    #[test]
    fn all_weights_at_least_one() {
        let t = IdfTable::compute(&docs(&["a b c", "a b", "a"])).unwrap();
        for w in ["a", "b", "c"] {
            assert!(t.weight(w) >= 1.0);
        }
    }

    #[test]
    fn empty_document_set_rejected() {
        assert!(IdfTable::compute(&[]).is_err());
    }
}
