//! Generation: caption prior, type sampling, bigram fusion, beam search
//! with a fixed type-keyword prefix.

use super::forward::{correlate, encode, type_probabilities, DecoderSession};
use super::params::VqgModel;
use crate::corpus::{Caption, QuestionType, Sentence, Vocabulary, END};
use crate::error::{Error, Result};
use crate::ngram::KneserNeyModel;
use crate::numerics::{softmax, Tape, Tensor};
use crate::rng::{sample_categorical, stream_rng};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Softmax over region confidences; stable under large values.
pub fn caption_prior(captions: &[Caption]) -> Result<Vec<f64>> {
    if captions.is_empty() {
        return Err(Error::invalid("caption prior of an empty caption set"));
    }
    let logits = Tensor::vector(captions.iter().map(|c| c.confidence).collect());
    Ok(softmax(&logits)?.data().to_vec())
}

/// Inverse-CDF draw of a question type from a 6-way distribution.
pub fn sample_type<R: Rng>(dist: &[f64], rng: &mut R) -> QuestionType {
    QuestionType::from_index(sample_categorical(dist, rng))
}

/// Inverse-CDF draw of a caption index from the prior.
pub fn sample_caption<R: Rng>(prior: &[f64], rng: &mut R) -> usize {
    sample_categorical(prior, rng)
}

/// Type indices sorted by descending probability (ties by enum order):
/// deterministic top-k selection.
pub fn top_k_types(dist: &[f64], k: usize) -> Vec<QuestionType> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap().then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(QuestionType::from_index)
        .collect()
}

/// Convex fusion `(1 - beta) * lstm + beta * bigram` of two distributions
/// over the same vocabulary.
pub fn fuse(lstm_dist: &[f64], bigram_dist: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta must lie in [0, 1], got {beta}")));
    }
    if lstm_dist.len() != bigram_dist.len() {
        return Err(Error::ShapeMismatch {
            op: "fuse",
            expected: format!("{} entries", lstm_dist.len()),
            got: format!("{} entries", bigram_dist.len()),
        });
    }
    Ok(lstm_dist
        .iter()
        .zip(bigram_dist)
        .map(|(l, b)| (1.0 - beta) * l + beta * b)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub qtype: QuestionType,
    /// Fusion weight; 0 disables the bigram model.
    pub beta: f64,
    /// Number of leading tokens forced to the type keyword sequence.
    pub k_fixed: usize,
    pub beam_width: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            qtype: QuestionType::What,
            beta: 0.25,
            k_fixed: 1,
            beam_width: 3,
            max_len: 20,
            seed: 0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.k_fixed < 1 {
            return Err(Error::invalid("k_fixed must be >= 1"));
        }
        if self.max_len < self.k_fixed {
            return Err(Error::invalid("max_len must be >= k_fixed"));
        }
        if self.beam_width < 1 {
            return Err(Error::invalid("beam_width must be >= 1"));
        }
        Ok(())
    }
}

/// One decoded question.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedQuestion {
    pub tokens: Sentence,
    pub qtype: QuestionType,
    pub caption_index: usize,
    /// Length-normalized log-probability (sum over scored steps, END
    /// included, divided by the step count).
    pub score: f64,
}

struct Hypothesis {
    tokens: Sentence,
    log_prob: f64,
    steps: usize,
    session: DecoderSession,
    finished: bool,
}

impl Hypothesis {
    fn normalized(&self) -> f64 {
        self.log_prob / self.steps.max(1) as f64
    }
}

/// Beam-search decode of one question of the configured type, from one
/// caption of one image. The first `k_fixed` tokens are forced to the
/// type keyword sequence; bigram fusion is active from step 1 onward
/// (the LSTM alone predicts the first word).
pub fn decode_question(
    model: &VqgModel,
    kn: &KneserNeyModel,
    vocab: &Vocabulary,
    image_feature: &Tensor,
    caption: &Sentence,
    config: &DecodeConfig,
) -> Result<(Sentence, f64)> {
    config.validate()?;
    let forced: Sentence = {
        let keyword_ids = vocab.encode_text(config.qtype.keyword());
        let mut forced = keyword_ids;
        forced.truncate(config.k_fixed);
        forced
    };

    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let feature = tape.leaf(image_feature.clone());
    let emb = encode(&mut tape, &vars, feature, caption)?;
    let fm = correlate(&mut tape, &vars, emb, feature)?;

    let mut root = DecoderSession::start(&mut tape, &vars);
    root.feed_feature_map(&mut tape, &vars, fm)?;

    let mut beams = vec![Hypothesis {
        tokens: Vec::new(),
        log_prob: 0.0,
        steps: 0,
        session: root,
        finished: false,
    }];

    for step in 0..config.max_len {
        if beams.iter().all(|b| b.finished) {
            break;
        }
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for beam in beams {
            if beam.finished {
                candidates.push(beam);
                continue;
            }
            let prev = *beam.tokens.last().unwrap_or(&crate::corpus::START);
            let mut session = beam.session;
            let logits = session.feed_token(&mut tape, &vars, prev)?;
            let lstm_dist = softmax(tape.value(logits))?.data().to_vec();
            // fusion starts once a previous word exists (step >= 1)
            let dist = if step >= 1 && config.beta > 0.0 {
                fuse(&lstm_dist, &kn.conditional_distribution(prev), config.beta)?
            } else {
                lstm_dist
            };

            if step < forced.len() {
                let tok = forced[step];
                candidates.push(extend(&beam.tokens, beam.log_prob, beam.steps, &dist, tok, session));
            } else {
                for tok in top_tokens(&dist, config.beam_width) {
                    candidates.push(extend(
                        &beam.tokens,
                        beam.log_prob,
                        beam.steps,
                        &dist,
                        tok,
                        session.clone(),
                    ));
                }
            }
        }
        candidates.sort_by(|a, b| b.normalized().partial_cmp(&a.normalized()).unwrap());
        candidates.truncate(config.beam_width);
        beams = candidates;
    }

    let best = beams
        .into_iter()
        .max_by(|a, b| a.normalized().partial_cmp(&b.normalized()).unwrap())
        .expect("at least one beam");
    let score = best.normalized();
    let mut tokens = best.tokens;
    if tokens.last() == Some(&END) {
        tokens.pop();
    }
    Ok((tokens, score))
}

fn extend(
    tokens: &Sentence,
    log_prob: f64,
    steps: usize,
    dist: &[f64],
    tok: usize,
    session: DecoderSession,
) -> Hypothesis {
    let mut tokens = tokens.clone();
    tokens.push(tok);
    Hypothesis {
        finished: tok == END,
        tokens,
        log_prob: log_prob + dist[tok].ln(),
        steps: steps + 1,
        session,
    }
}

/// Indices of the `k` largest probabilities, descending, ties by index.
fn top_tokens(dist: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap().then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// How generation chooses question types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeSelection {
    /// Stochastic draw from the selector's distribution.
    Sample,
    /// Deterministic: the best-scoring type of the sampled caption that
    /// has not been used yet (all six used resets the pool).
    TopDistinct,
}

/// Full generative pass for one image: repeatedly sample a caption from
/// the prior, choose a type, and beam-decode a question. Questions are
/// deduplicated by exact token sequence (up to 5 redraws each) and
/// returned sorted by length-normalized score.
#[allow(clippy::too_many_arguments)]
pub fn generate(
    model: &VqgModel,
    kn: &KneserNeyModel,
    vocab: &Vocabulary,
    image_feature: &Tensor,
    captions: &[Caption],
    n_questions: usize,
    config: &DecodeConfig,
    mode: TypeSelection,
) -> Result<Vec<GeneratedQuestion>> {
    if n_questions < 1 {
        return Err(Error::invalid("n_questions must be >= 1"));
    }
    config.validate()?;
    let prior = caption_prior(captions)?;
    let caption_ids: Vec<Sentence> = captions
        .iter()
        .map(|c| vocab.encode_words(&c.words))
        .collect();
    let mut rng = stream_rng(config.seed, "sampling");
    let mut used_types: Vec<QuestionType> = Vec::new();
    let mut out: Vec<GeneratedQuestion> = Vec::new();

    for _ in 0..n_questions {
        let mut accepted = None;
        for _attempt in 0..5 {
            let cap_idx = sample_caption(&prior, &mut rng);
            let type_dist = type_probabilities(model, &caption_ids[cap_idx])?;
            let qtype = match mode {
                TypeSelection::Sample => sample_type(&type_dist, &mut rng),
                TypeSelection::TopDistinct => {
                    if used_types.len() == crate::corpus::NUM_TYPES {
                        used_types.clear();
                    }
                    *top_k_types(&type_dist, crate::corpus::NUM_TYPES)
                        .iter()
                        .find(|t| !used_types.contains(t))
                        .expect("six types cannot all be used here")
                }
            };
            let question_config = DecodeConfig {
                qtype,
                ..*config
            };
            let (tokens, score) = decode_question(
                model,
                kn,
                vocab,
                image_feature,
                &caption_ids[cap_idx],
                &question_config,
            )?;
            if out.iter().any(|g| g.tokens == tokens) {
                continue;
            }
            if mode == TypeSelection::TopDistinct {
                used_types.push(qtype);
            }
            accepted = Some(GeneratedQuestion {
                tokens,
                qtype,
                caption_index: cap_idx,
                score,
            });
            break;
        }
        if let Some(g) = accepted {
            out.push(g);
        }
    }
    out.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap());
    Ok(out)
}
