//! Question-caption similarity and the kernel-density caption posterior
//! used as training instance weights.

use crate::corpus::{EmbeddingMatrix, IdfTable, Sentence, Vocabulary, UNK};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// Interpolation weight between string and embedding similarity;
    /// configured pipelines keep it in (0, 1).
    pub alpha: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig { alpha: 0.75 }
    }
}

/// All contiguous 3-character substrings (spaces participate); strings
/// shorter than 3 characters yield the singleton set of the string itself.
pub fn char_trigrams(s: &str) -> HashSet<String> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() < 3 {
        return HashSet::from([s.to_string()]);
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

/// Jaccard index over char trigram sets of the two surface strings.
pub fn sim_string(q: &str, c: &str) -> f64 {
    let tq = char_trigrams(q);
    let tc = char_trigrams(c);
    let intersection = tq.intersection(&tc).count();
    let union = tq.union(&tc).count();
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Cosine similarity of IDF-weighted embedding averages. Weights are
/// `IDF(w_i) / sum_j IDF(w_j)` within each sentence; UNK tokens are
/// filtered first. A zero-norm average (or an empty sentence after
/// filtering) gives 0.
pub fn sim_embedding(
    q: &Sentence,
    c: &Sentence,
    idf: &IdfTable,
    embeddings: &EmbeddingMatrix,
    vocab: &Vocabulary,
) -> f64 {
    let mean = |sentence: &Sentence| -> Option<Vec<f64>> {
        let kept: Vec<usize> = sentence.iter().copied().filter(|&id| id != UNK).collect();
        if kept.is_empty() {
            return None;
        }
        let weights: Vec<f64> = kept.iter().map(|&id| idf.weight(vocab.word(id))).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = vec![0.0; crate::corpus::EMBED_DIM];
        for (&id, &w) in kept.iter().zip(&weights) {
            let col = embeddings.column(id);
            let scale = w / total;
            for (a, v) in acc.iter_mut().zip(col) {
                *a += scale * v;
            }
        }
        Some(acc)
    };
    let (Some(qm), Some(cm)) = (mean(q), mean(c)) else {
        return 0.0;
    };
    let dot: f64 = qm.iter().zip(&cm).map(|(a, b)| a * b).sum();
    let nq: f64 = qm.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nc: f64 = cm.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nq == 0.0 || nc == 0.0 {
        0.0
    } else {
        dot / (nq * nc)
    }
}

/// `alpha * sim_string + (1 - alpha) * sim_embedding`, clamped below at 0
/// so the kernel stays non-negative (the embedding cosine can be
/// negative, which would break the posterior's probability reading).
pub fn interpolate(alpha: f64, string_sim: f64, embedding_sim: f64) -> f64 {
    (alpha * string_sim + (1.0 - alpha) * embedding_sim).max(0.0)
}

/// Everything similarity needs, bundled for repeated calls.
pub struct AlignmentContext<'a> {
    pub vocab: &'a Vocabulary,
    pub idf: &'a IdfTable,
    pub embeddings: &'a EmbeddingMatrix,
    pub config: SimilarityConfig,
}

impl AlignmentContext<'_> {
    /// Interpolated question-caption similarity over word sequences.
    /// String similarity runs on detokenized lowercase surfaces with
    /// single-space joins.
    pub fn similarity(&self, q_words: &[String], c_words: &[String]) -> f64 {
        let qs = q_words.join(" ");
        let cs = c_words.join(" ");
        let q_ids = self.vocab.encode_words(q_words);
        let c_ids = self.vocab.encode_words(c_words);
        let se = sim_embedding(&q_ids, &c_ids, self.idf, self.embeddings, self.vocab);
        interpolate(self.config.alpha, sim_string(&qs, &cs), se)
    }

    /// Normalized similarities over a caption set; all-zero similarities
    /// fall back to the uniform distribution.
    pub fn caption_posterior(&self, q_words: &[String], captions: &[Vec<String>]) -> Vec<f64> {
        let sims: Vec<f64> = captions
            .iter()
            .map(|c| self.similarity(q_words, c))
            .collect();
        normalize_posterior(&sims)
    }
}

/// Eq-style normalization of non-negative kernel values; the degenerate
/// all-zero case is uniform.
pub fn normalize_posterior(sims: &[f64]) -> Vec<f64> {
    debug_assert!(!sims.is_empty());
    let total: f64 = sims.iter().sum();
    if total <= 0.0 {
        vec![1.0 / sims.len() as f64; sims.len()]
    } else {
        sims.iter().map(|s| s / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::numerics::Tensor;

    #[test]
    fn trigram_definition() {
        assert_eq!(
            char_trigrams("cats"),
            HashSet::from(["cat".to_string(), "ats".to_string()])
        );
        assert_eq!(char_trigrams("ab"), HashSet::from(["ab".to_string()]));
        assert_eq!(
            char_trigrams("a cat"),
            HashSet::from(["a c".to_string(), " ca".to_string(), "cat".to_string()])
        );
    }

    #[test]
    fn string_similarity_examples() {
        assert_eq!(sim_string("what color", "what color"), 1.0);
        // {cat, ats} vs {cat}: intersection 1, union 2
        assert_eq!(sim_string("cats", "cat"), 0.5);
        assert_eq!(sim_string("abc", "xyz"), 0.0);
        assert_eq!(sim_string("", ""), 1.0);
    }

    #[test]
    fn string_similarity_symmetric() {
        for (a, b) in [("cats", "cat"), ("the car", "a car"), ("", "xy")] {
            assert_eq!(sim_string(a, b), sim_string(b, a));
        }
    }

    fn two_word_setup() -> (Vocabulary, EmbeddingMatrix) {
        let vocab = Vocabulary::build(&["left right".to_string()], 1).unwrap();
        let k = vocab.size();
        // orthogonal columns for "left" and "right"
        let mut weights = Tensor::zeros(&[crate::corpus::EMBED_DIM, k]);
        let (l, r) = (vocab.id("left"), vocab.id("right"));
        weights.data_mut()[l] = 1.0; // row 0, col l
        weights.data_mut()[crate::corpus::EMBED_DIM / 2 * k + r] = 1.0;
        let embeddings = EmbeddingMatrix {
            weights,
            pretrained: vec![false; k],
        };
        (vocab, embeddings)
    }

    #[test]
    fn embedding_similarity_identical_is_one() {
        let (vocab, emb) = two_word_setup();
        let idf = IdfTable::uniform();
        let s = vocab.encode_text("left right");
        assert!((sim_embedding(&s, &s, &idf, &emb, &vocab) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embedding_similarity_orthogonal_is_zero() {
        let (vocab, emb) = two_word_setup();
        let idf = IdfTable::uniform();
        let l = vocab.encode_text("left");
        let r = vocab.encode_text("right");
        assert_eq!(sim_embedding(&l, &r, &idf, &emb, &vocab), 0.0);
    }

    #[test]
    fn unk_only_sentence_gives_zero() {
        let (vocab, emb) = two_word_setup();
        let idf = IdfTable::uniform();
        let q = vocab.encode_text("zebra"); // -> UNK
        let c = vocab.encode_text("left");
        assert_eq!(sim_embedding(&q, &c, &idf, &emb, &vocab), 0.0);
    }

    #[test]
    fn interpolation_arithmetic() {
        assert!((interpolate(0.75, 0.5, 0.2) - 0.425).abs() < 1e-15);
        // alpha = 1 reduces to the string measure
        assert_eq!(interpolate(1.0, 0.37, -0.9), 0.37);
        // negative mixes clamp at zero
        assert_eq!(interpolate(0.5, 0.0, -0.8), 0.0);
    }

    #[test]
    fn posterior_examples() {
        assert_eq!(normalize_posterior(&[0.7]), vec![1.0]);
        let p = normalize_posterior(&[0.3, 0.1]);
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert_eq!(
            normalize_posterior(&[0.0, 0.0, 0.0, 0.0]),
            vec![0.25; 4]
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn posterior_sums_to_one(sims in prop::collection::vec(0.0f64..10.0, 1..8)) {
                let p = normalize_posterior(&sims);
                let sum: f64 = p.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(p.iter().all(|&x| x >= 0.0));
            }

            #[test]
            fn posterior_permutation_equivariant(
                sims in prop::collection::vec(0.0f64..10.0, 2..8),
                rot in 1usize..7,
            ) {
                let rot = rot % sims.len();
                let mut rotated = sims.clone();
                rotated.rotate_left(rot);
                let mut p = normalize_posterior(&sims);
                let pr = normalize_posterior(&rotated);
                p.rotate_left(rot);
                for (a, b) in p.iter().zip(&pr) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }

            #[test]
            fn posterior_scale_invariant(
                sims in prop::collection::vec(0.01f64..10.0, 1..8),
                scale in 0.1f64..100.0,
            ) {
                let scaled: Vec<f64> = sims.iter().map(|s| s * scale).collect();
                let a = normalize_posterior(&sims);
                let b = normalize_posterior(&scaled);
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }

            #[test]
            fn interpolation_monotone_in_components(
                alpha in 0.0f64..1.0,
                s1 in 0.0f64..1.0,
                s2 in 0.0f64..1.0,
                e in -1.0f64..1.0,
            ) {
                let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
                prop_assert!(interpolate(alpha, lo, e) <= interpolate(alpha, hi, e) + 1e-15);
            }

            #[test]
            fn string_sim_is_one_iff_trigram_sets_equal(a in "[a-c ]{0,6}", b in "[a-c ]{0,6}") {
                let equal_sets = char_trigrams(&a) == char_trigrams(&b);
                let is_one = sim_string(&a, &b) == 1.0;
                prop_assert_eq!(equal_sets, is_one);
            }
        }
    }
}
