//! METEOR-lite: unigram alignment F-mean with a fragmentation penalty.
//! The WordNet synonym stage is replaced by embedding-cosine matching.

use crate::corpus::{EmbeddingMatrix, Vocabulary, UNK};
use crate::error::{Error, Result};

/// Cosine threshold for the embedding matching stage.
const SYNONYM_THRESHOLD: f64 = 0.8;

/// Embedding lookup for the second matching stage.
pub struct MeteorMatcher<'a> {
    pub embeddings: &'a EmbeddingMatrix,
    pub vocab: &'a Vocabulary,
}

impl MeteorMatcher<'_> {
    fn cosine(&self, a: &str, b: &str) -> f64 {
        let (ia, ib) = (self.vocab.id(a), self.vocab.id(b));
        if ia == UNK || ib == UNK {
            return 0.0;
        }
        let ca = self.embeddings.column(ia);
        let cb = self.embeddings.column(ib);
        let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
        let na: f64 = ca.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = cb.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}

/// One-to-one greedy alignment in two stages (exact surface match, then
/// embedding cosine above threshold), preferring close positions so
/// chunks stay minimal. Returns (candidate_pos, reference_pos) pairs
/// sorted by candidate position.
fn align(
    candidate: &[String],
    reference: &[String],
    matcher: Option<&MeteorMatcher>,
) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut matches = Vec::new();

    // stage 1: exact matches, nearest reference position first
    for (i, word) in candidate.iter().enumerate() {
        let best = reference
            .iter()
            .enumerate()
            .filter(|&(j, w)| !ref_used[j] && w == word)
            .min_by_key(|&(j, _)| ((j as i64 - i as i64).abs(), j));
        if let Some((j, _)) = best {
            cand_used[i] = true;
            ref_used[j] = true;
            matches.push((i, j));
        }
    }

    // stage 2: embedding matches above the cosine threshold
    if let Some(matcher) = matcher {
        for (i, word) in candidate.iter().enumerate() {
            if cand_used[i] {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (j, ref_word) in reference.iter().enumerate() {
                if ref_used[j] {
                    continue;
                }
                let cos = matcher.cosine(word, ref_word);
                if cos >= SYNONYM_THRESHOLD {
                    let better = match best {
                        None => true,
                        Some((bj, bcos)) => {
                            cos > bcos
                                || (cos == bcos
                                    && ((j as i64 - i as i64).abs(), j)
                                        < ((bj as i64 - i as i64).abs(), bj))
                        }
                    };
                    if better {
                        best = Some((j, cos));
                    }
                }
            }
            if let Some((j, _)) = best {
                cand_used[i] = true;
                ref_used[j] = true;
                matches.push((i, j));
            }
        }
    }

    matches.sort_unstable();
    matches
}

/// Maximal runs of matches consecutive in both sentences.
fn count_chunks(matches: &[(usize, usize)]) -> usize {
    if matches.is_empty() {
        return 0;
    }
    let mut chunks = 1;
    for pair in matches.windows(2) {
        let (ci, ri) = pair[0];
        let (cj, rj) = pair[1];
        if cj != ci + 1 || rj != ri + 1 {
            chunks += 1;
        }
    }
    chunks
}

/// `F_mean * (1 - penalty)` with `F_mean = 10 P R / (R + 9 P)` and
/// `penalty = 0.5 * (chunks / matches)^3`; 0 when nothing aligns.
pub fn meteor_lite(
    candidate: &[String],
    reference: &[String],
    matcher: Option<&MeteorMatcher>,
) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::invalid("METEOR of an empty sentence"));
    }
    let matches = align(candidate, reference, matcher);
    let m = matches.len() as f64;
    if matches.is_empty() {
        return Ok(0.0);
    }
    let p = m / candidate.len() as f64;
    let r = m / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let chunks = count_chunks(&matches) as f64;
    let penalty = 0.5 * (chunks / m).powi(3);
    Ok(f_mean * (1.0 - penalty))
}
