//! Kneser-Ney smoothed bigram language model used for fusion decoding.

use crate::corpus::{Sentence, Vocabulary};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

/// Continuation-probability floor mass, spread over the vocabulary and
/// renormalized, so fused distributions never contain exact zeros that
/// mask LSTM probabilities.
const PKN_FLOOR: f64 = 1e-10;

/// Raw bigram count statistics.
#[derive(Debug, Clone)]
pub struct BigramStats {
    /// Occurrences of each word.
    pub unigram: Vec<u64>,
    /// count(w_prev, w) over adjacent pairs.
    pub bigram: HashMap<(usize, usize), u64>,
    /// Distinct-successor counts N1+(w ·).
    pub successors: Vec<u64>,
    /// Distinct-predecessor counts N1+(· w).
    pub predecessors: Vec<u64>,
    /// Total distinct bigram types N1+(··).
    pub distinct_bigrams: u64,
    pub discount: f64,
    pub vocab_size: usize,
}

/// Exact counts over all adjacent token pairs. Sentences should already
/// carry START/END markers when first and last words are to participate
/// in bigrams; this function counts exactly what it is given.
pub fn count_bigrams(corpus: &[Sentence], vocab_size: usize, discount: f64) -> Result<BigramStats> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(Error::invalid(format!(
            "discount d must lie in (0, 1), got {discount}"
        )));
    }
    let mut stats = BigramStats {
        unigram: vec![0; vocab_size],
        bigram: HashMap::new(),
        successors: vec![0; vocab_size],
        predecessors: vec![0; vocab_size],
        distinct_bigrams: 0,
        discount,
        vocab_size,
    };
    for sentence in corpus {
        for &w in sentence {
            stats.unigram[w] += 1;
        }
        for pair in sentence.windows(2) {
            let (prev, w) = (pair[0], pair[1]);
            let count = stats.bigram.entry((prev, w)).or_insert(0);
            if *count == 0 {
                stats.successors[prev] += 1;
                stats.predecessors[w] += 1;
                stats.distinct_bigrams += 1;
            }
            *count += 1;
        }
    }
    Ok(stats)
}

/// Smoothed conditional probabilities derived from [`BigramStats`]:
///
/// `P(w | prev) = max(count(prev, w) - d, 0) / ctx(prev)
///              + d * N1+(prev ·) / ctx(prev) * P_KN(w)`
///
/// with `ctx(prev)` the total bigrams observed from `prev` (the unique
/// denominator that makes each conditional distribution normalize) and
/// `P_KN(w) = N1+(· w) / N1+(··)` the continuation probability, floored
/// and renormalized. Unseen contexts back off to `P_KN` alone.
#[derive(Debug, Clone)]
pub struct KneserNeyModel {
    stats: BigramStats,
    /// Per-context total bigram count (the denominator).
    context_total: Vec<u64>,
    /// Floored, renormalized continuation distribution.
    pkn: Vec<f64>,
    /// Adjacency: observed successors of each context, with counts.
    adjacency: Vec<Vec<(usize, u64)>>,
}

impl KneserNeyModel {
    pub fn from_stats(stats: BigramStats) -> Self {
        let k = stats.vocab_size;
        let mut context_total = vec![0u64; k];
        let mut adjacency: Vec<Vec<(usize, u64)>> = vec![Vec::new(); k];
        for (&(prev, w), &count) in &stats.bigram {
            context_total[prev] += count;
            adjacency[prev].push((w, count));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let floor = PKN_FLOOR / k.max(1) as f64;
        let base_sum = if stats.distinct_bigrams > 0 { 1.0 } else { 0.0 };
        let denom = base_sum + PKN_FLOOR;
        let pkn = (0..k)
            .map(|w| {
                let base = if stats.distinct_bigrams > 0 {
                    stats.predecessors[w] as f64 / stats.distinct_bigrams as f64
                } else {
                    0.0
                };
                (base + floor) / denom
            })
            .collect();
        KneserNeyModel {
            stats,
            context_total,
            pkn,
            adjacency,
        }
    }

    /// Counts adjacent pairs in `corpus` and derives the smoothed model.
    pub fn estimate(corpus: &[Sentence], vocab_size: usize, discount: f64) -> Result<Self> {
        Ok(Self::from_stats(count_bigrams(corpus, vocab_size, discount)?))
    }

    pub fn stats(&self) -> &BigramStats {
        &self.stats
    }

    pub fn vocab_size(&self) -> usize {
        self.stats.vocab_size
    }

    pub fn discount(&self) -> f64 {
        self.stats.discount
    }

    /// Continuation probability of `w` (floored, renormalized).
    pub fn continuation_prob(&self, w: usize) -> f64 {
        self.pkn[w]
    }

    pub fn bigram_count(&self, prev: usize, w: usize) -> u64 {
        self.stats.bigram.get(&(prev, w)).copied().unwrap_or(0)
    }

    /// Smoothed `P(w | prev)`.
    pub fn prob(&self, prev: usize, w: usize) -> f64 {
        let ctx = self.context_total[prev];
        if ctx == 0 {
            return self.pkn[w];
        }
        let ctx = ctx as f64;
        let d = self.stats.discount;
        let count = self.bigram_count(prev, w) as f64;
        let discounted = (count - d).max(0.0) / ctx;
        let lambda = d * self.stats.successors[prev] as f64 / ctx;
        discounted + lambda * self.pkn[w]
    }

    /// Full conditional distribution over the vocabulary for one context.
    pub fn conditional_distribution(&self, prev: usize) -> Vec<f64> {
        let ctx = self.context_total[prev];
        if ctx == 0 {
            return self.pkn.clone();
        }
        let ctx = ctx as f64;
        let d = self.stats.discount;
        let lambda = d * self.stats.successors[prev] as f64 / ctx;
        let mut dist: Vec<f64> = self.pkn.iter().map(|p| lambda * p).collect();
        for &(w, count) in &self.adjacency[prev] {
            dist[w] += (count as f64 - d).max(0.0) / ctx;
        }
        dist
    }

    /// `log P(w_0) + sum log P(w_i | w_{i-1})`, with the first word scored
    /// by its continuation probability. A zero-probability step yields
    /// negative infinity, never NaN.
    pub fn sequence_log_prob(&self, sentence: &Sentence) -> Result<f64> {
        let Some(&first) = sentence.first() else {
            return Err(Error::invalid("sequence_log_prob of an empty sentence"));
        };
        let mut lp = self.pkn[first].ln();
        for pair in sentence.windows(2) {
            lp += self.prob(pair[0], pair[1]).ln();
        }
        Ok(lp)
    }

    /// Plain-text count dump, lines `w_prev w count`, sorted by ids.
    pub fn dump_counts<W: Write>(&self, vocab: &Vocabulary, out: &mut W) -> Result<()> {
        let mut pairs: Vec<(usize, usize, u64)> = self
            .stats
            .bigram
            .iter()
            .map(|(&(p, w), &c)| (p, w, c))
            .collect();
        pairs.sort_unstable();
        for (p, w, c) in pairs {
            writeln!(out, "{} {} {}", vocab.word(p), vocab.word(w), c)?;
        }
        Ok(())
    }
}
