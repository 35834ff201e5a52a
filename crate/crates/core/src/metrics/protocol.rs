//! Precision- and coverage-oriented aggregation protocols, plus question
//! distribution statistics.

use super::bleu::bleu_n;
use super::meteor::{meteor_lite, MeteorMatcher};
use super::rouge::rouge_l;
use crate::corpus::{extract_question_type, QuestionType, NUM_TYPES};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The six reported metrics, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Bleu1,
    Bleu2,
    Bleu3,
    Bleu4,
    RougeL,
    Meteor,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Bleu1,
        Metric::Bleu2,
        Metric::Bleu3,
        Metric::Bleu4,
        Metric::RougeL,
        Metric::Meteor,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Bleu1 => "bleu1",
            Metric::Bleu2 => "bleu2",
            Metric::Bleu3 => "bleu3",
            Metric::Bleu4 => "bleu4",
            Metric::RougeL => "rouge_l",
            Metric::Meteor => "meteor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Precision,
    Coverage,
}

/// Score of one candidate against one reference.
pub fn score_pair(
    metric: Metric,
    candidate: &[String],
    reference: &[String],
    matcher: Option<&MeteorMatcher>,
) -> Result<f64> {
    match metric {
        Metric::Bleu1 => bleu_n(candidate, &[reference.to_vec()], 1),
        Metric::Bleu2 => bleu_n(candidate, &[reference.to_vec()], 2),
        Metric::Bleu3 => bleu_n(candidate, &[reference.to_vec()], 3),
        Metric::Bleu4 => bleu_n(candidate, &[reference.to_vec()], 4),
        Metric::RougeL => rouge_l(candidate, reference),
        Metric::Meteor => meteor_lite(candidate, reference, matcher),
    }
}

/// Precision orientation for one image: each generated question scores
/// against its best-matching reference; the image value is the mean over
/// generated questions.
pub fn precision_image(
    generated: &[Vec<String>],
    references: &[Vec<String>],
    metric: Metric,
    matcher: Option<&MeteorMatcher>,
) -> Result<f64> {
    if generated.is_empty() || references.is_empty() {
        return Err(Error::invalid("precision protocol needs non-empty lists"));
    }
    let mut total = 0.0;
    for g in generated {
        let mut best = f64::NEG_INFINITY;
        for r in references {
            best = best.max(score_pair(metric, g, r, matcher)?);
        }
        total += best;
    }
    Ok(total / generated.len() as f64)
}

/// Coverage orientation for one image: each reference scores against its
/// best-matching generated question; the image value is the mean over
/// references (the recall analogue for diversity).
pub fn coverage_image(
    generated: &[Vec<String>],
    references: &[Vec<String>],
    metric: Metric,
    matcher: Option<&MeteorMatcher>,
) -> Result<f64> {
    if generated.is_empty() || references.is_empty() {
        return Err(Error::invalid("coverage protocol needs non-empty lists"));
    }
    let mut total = 0.0;
    for r in references {
        let mut best = f64::NEG_INFINITY;
        for g in generated {
            best = best.max(score_pair(metric, g, r, matcher)?);
        }
        total += best;
    }
    Ok(total / references.len() as f64)
}

/// Unweighted mean over images.
pub fn corpus_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Normalized frequency histogram over the six types plus OTHER, keyed by
/// each question's first word.
pub fn type_distribution(questions: &[Vec<String>]) -> [f64; NUM_TYPES + 1] {
    let mut counts = [0usize; NUM_TYPES + 1];
    for q in questions {
        let t = extract_question_type(q);
        let idx = t.index().unwrap_or(NUM_TYPES);
        counts[idx] += 1;
    }
    let total: usize = counts.iter().sum();
    let mut dist = [0.0; NUM_TYPES + 1];
    if total > 0 {
        for (d, &c) in dist.iter_mut().zip(&counts) {
            *d = c as f64 / total as f64;
        }
    }
    dist
}

/// Histogram over question lengths (token counts).
pub fn length_distribution(questions: &[Vec<String>]) -> Vec<(usize, f64)> {
    let mut counts = std::collections::BTreeMap::new();
    for q in questions {
        *counts.entry(q.len()).or_insert(0usize) += 1;
    }
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(len, c)| (len, c as f64 / total.max(1) as f64))
        .collect()
}

/// Shannon entropy in nats; zero-probability cells contribute nothing.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Label order for histogram output: the six types then OTHER.
pub fn type_labels() -> [&'static str; NUM_TYPES + 1] {
    [
        QuestionType::What.keyword(),
        QuestionType::When.keyword(),
        QuestionType::Where.keyword(),
        QuestionType::Who.keyword(),
        QuestionType::Why.keyword(),
        QuestionType::How.keyword(),
        "other",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    fn set(items: &[&str]) -> Vec<Vec<String>> {
        items.iter().map(|s| toks(s)).collect()
    }

    #[test]
    fn identical_sets_score_one_for_exact_metrics() {
        let qs = set(&["what color is the car", "where is the dog"]);
        for metric in [
            Metric::Bleu1,
            Metric::Bleu2,
            Metric::Bleu3,
            Metric::Bleu4,
            Metric::RougeL,
        ] {
            let p = precision_image(&qs, &qs, metric, None).unwrap();
            let c = coverage_image(&qs, &qs, metric, None).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "{metric:?} precision {p}");
            assert!((c - 1.0).abs() < 1e-12, "{metric:?} coverage {c}");
        }
    }

    #[test]
    fn exact_match_dominates_precision() {
        let generated = set(&["what color is the car"]);
        let references = set(&[
            "where is the dog",
            "what color is the car",
            "who is near the tree",
        ]);
        let p = precision_image(&generated, &references, Metric::Bleu1, None).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adding_worse_generated_question_lowers_or_keeps_precision() {
        let references = set(&["what color is the car"]);
        let good = set(&["what color is the car"]);
        let mixed = set(&["what color is the car", "zebra zebra zebra"]);
        let p_good = precision_image(&good, &references, Metric::Bleu1, None).unwrap();
        let p_mixed = precision_image(&mixed, &references, Metric::Bleu1, None).unwrap();
        assert!(p_mixed <= p_good);
    }

    #[test]
    fn coverage_monotone_in_generated_set() {
        let references = set(&["what color is the car", "where is the dog"]);
        let mut generated = set(&["what color is the cat"]);
        let mut prev = 0.0;
        for extra in ["where is the dog", "who is there", "what color is the car"] {
            generated.push(toks(extra));
            for metric in Metric::ALL {
                let c = coverage_image(&generated, &references, metric, None).unwrap();
                if metric == Metric::Bleu1 {
                    assert!(c >= prev - 1e-12);
                    prev = c;
                }
            }
        }
    }

    #[test]
    fn protocols_invariant_to_list_order() {
        let generated = set(&["what color is the car", "where is the dog", "who is it"]);
        let references = set(&["where is the dog", "how many cats are there"]);
        let mut g2 = generated.clone();
        g2.reverse();
        let mut r2 = references.clone();
        r2.reverse();
        for metric in Metric::ALL {
            let a = precision_image(&generated, &references, metric, None).unwrap();
            let b = precision_image(&g2, &r2, metric, None).unwrap();
            assert!((a - b).abs() < 1e-12);
            let c = coverage_image(&generated, &references, metric, None).unwrap();
            let d = coverage_image(&g2, &r2, metric, None).unwrap();
            assert!((c - d).abs() < 1e-12);
        }
    }

    #[test]
    fn type_histogram_examples() {
        let all_what = set(&["what a", "what b", "what c"]);
        let d = type_distribution(&all_what);
        assert_eq!(d[0], 1.0);
        assert_eq!(d[1..].iter().sum::<f64>(), 0.0);

        let balanced = set(&[
            "what a", "when b", "where c", "who d", "why e", "how f",
        ]);
        let d = type_distribution(&balanced);
        for t in 0..NUM_TYPES {
            assert!((d[t] - 1.0 / 6.0).abs() < 1e-12);
        }
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_prefers_balanced_over_skewed() {
        let balanced = [1.0 / 6.0; 6];
        // ground-truth-like skew: 89% on WHAT
        let mut skewed = [0.11 / 5.0; 6];
        skewed[0] = 0.89;
        assert!(entropy(&balanced) > entropy(&skewed));
        assert!((entropy(&balanced) - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_lists_rejected() {
        let qs = set(&["what a"]);
        assert!(precision_image(&[], &qs, Metric::Bleu1, None).is_err());
        assert!(coverage_image(&qs, &[], Metric::Bleu1, None).is_err());
    }
}
