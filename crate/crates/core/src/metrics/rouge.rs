//! ROUGE-L: longest-common-subsequence F-measure.

use crate::error::{Error, Result};

/// F-measure beta matching the coco-caption implementation.
const ROUGE_BETA: f64 = 1.2;

fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `P = LCS/|candidate|`, `R = LCS/|reference|`,
/// `F = (1 + b^2) P R / (R + b^2 P)` with `b = 1.2`; 0 when the LCS is
/// empty.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(Error::invalid("ROUGE-L of an empty sentence"));
    }
    let lcs = lcs_length(candidate, reference) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = ROUGE_BETA * ROUGE_BETA;
    Ok((1.0 + b2) * p * r / (r + b2 * p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn identical_sentences_score_one() {
        let s = toks("what color is the floor");
        assert!((rouge_l(&s, &s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dp_oracle_example() {
        // LCS("what is the floor color", "what color is the floor") =
        // "what is the floor", length 4; P = R = 4/5 -> F = 0.8
        let cand = toks("what is the floor color");
        let reference = toks("what color is the floor");
        assert_eq!(lcs_length(&cand, &reference), 4);
        let f = rouge_l(&cand, &reference).unwrap();
        assert!((f - 0.8).abs() < 1e-9, "{f}");
    }

    #[test]
    fn disjoint_vocabularies_score_zero() {
        let f = rouge_l(&toks("a b c"), &toks("x y z")).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn asymmetric_lengths_use_f_measure() {
        // LCS = 2, P = 2/2 = 1, R = 2/4 = 0.5
        let cand = toks("the cat");
        let reference = toks("the cat sat down");
        let p: f64 = 1.0;
        let r: f64 = 0.5;
        let b2 = 1.2f64 * 1.2;
        let expect = (1.0 + b2) * p * r / (r + b2 * p);
        let f = rouge_l(&cand, &reference).unwrap();
        assert!((f - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(rouge_l(&[], &toks("a")).is_err());
        assert!(rouge_l(&toks("a"), &[]).is_err());
    }
}
