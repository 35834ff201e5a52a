//! Sentence-level BLEU with clipped modified precision and small-sentence
//! smoothing.

use crate::error::{Error, Result};
use std::collections::HashMap;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Modified n-gram precision: candidate counts clipped to the maximum
/// count of the same gram in any reference.
fn modified_precision(candidate: &[String], references: &[Vec<String>], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let total: usize = cand.values().sum();
    if total == 0 {
        return 0.0;
    }
    let ref_counts: Vec<HashMap<&[String], usize>> =
        references.iter().map(|r| ngram_counts(r, n)).collect();
    let mut clipped = 0usize;
    for (gram, &count) in &cand {
        let max_ref = ref_counts
            .iter()
            .map(|rc| rc.get(gram).copied().unwrap_or(0))
            .max()
            .unwrap_or(0);
        clipped += count.min(max_ref);
    }
    clipped as f64 / total as f64
}

/// Length of the reference closest to the candidate length (ties go to
/// the shorter reference).
fn closest_reference_length(candidate_len: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| {
            let diff = (len as i64 - candidate_len as i64).abs();
            (diff, len)
        })
        .unwrap_or(0)
}

/// Sentence-level BLEU-n: geometric mean of modified precisions for
/// orders 1..n times the brevity penalty `exp(1 - r/c)` when the
/// candidate is shorter than the closest reference. Zero precisions are
/// replaced by `1 / (2c)` (short questions rarely share high orders).
pub fn bleu_n(candidate: &[String], references: &[Vec<String>], n: usize) -> Result<f64> {
    if n == 0 || n > 4 {
        return Err(Error::invalid(format!("BLEU order must be 1..=4, got {n}")));
    }
    if candidate.is_empty() {
        return Err(Error::invalid("BLEU of an empty candidate"));
    }
    if references.is_empty() {
        return Err(Error::invalid("BLEU without references"));
    }
    let c = candidate.len() as f64;
    let smoothing = 1.0 / (2.0 * c);
    let mut log_sum = 0.0;
    for order in 1..=n {
        let p = modified_precision(candidate, references, order);
        let p = if p == 0.0 { smoothing } else { p };
        log_sum += p.ln();
    }
    let geo_mean = (log_sum / n as f64).exp();
    let r = closest_reference_length(candidate.len(), references) as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    Ok(bp * geo_mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn identical_candidate_scores_one_for_all_orders() {
        let cand = toks("what color is the floor");
        let refs = vec![toks("what color is the floor")];
        for n in 1..=4 {
            let b = bleu_n(&cand, &refs, n).unwrap();
            assert!((b - 1.0).abs() < 1e-12, "order {n}: {b}");
        }
    }

    #[test]
    fn clipping_oracle_the_the_the() {
        // hand count: candidate "the the the" holds three unigrams, all
        // "the"; the reference caps "the" at one -> precision 1/3
        let cand = toks("the the the");
        let refs = vec![toks("the cat")];
        let b = bleu_n(&cand, &refs, 1).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-9, "{b}");
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let cand = toks("the cat");
        let refs = vec![toks("the cat sat down")];
        let b = bleu_n(&cand, &refs, 1).unwrap();
        let expect = (1.0f64 - 4.0 / 2.0).exp(); // p1 = 1, BP = e^{-1}
        assert!((b - expect).abs() < 1e-12, "{b}");
    }

    #[test]
    fn zero_higher_order_precisions_fall_back_to_smoothing() {
        // no shared bigram: p2 = 1/(2*3), p1 = 2/3; BP = exp(1 - 4/3)
        let cand = toks("the red cat");
        let refs = vec![toks("cat of the house")];
        let b = bleu_n(&cand, &refs, 2).unwrap();
        let geo = ((2.0f64 / 3.0).ln() / 2.0 + (1.0f64 / 6.0).ln() / 2.0).exp();
        let expect = (1.0f64 - 4.0 / 3.0).exp() * geo;
        assert!((b - expect).abs() < 1e-12, "{b} vs {expect}");
    }

    #[test]
    fn closest_reference_length_ties_prefer_shorter() {
        // candidate length 3; refs of length 2 and 4 tie -> r = 2, no BP
        let cand = toks("a b c");
        let refs = vec![toks("a b"), toks("a b c d")];
        let b4 = bleu_n(&cand, &refs, 1).unwrap();
        assert!((b4 - 1.0).abs() < 1e-12, "{b4}");
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(bleu_n(&[], &[toks("a")], 1).is_err());
        assert!(bleu_n(&toks("a"), &[], 1).is_err());
        assert!(bleu_n(&toks("a"), &[toks("a")], 5).is_err());
    }
}
