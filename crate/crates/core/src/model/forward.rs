//! Forward passes: type selector, caption encoder with image-first
//! reading, correlation module, decoder, and the joint log-probability.

use super::params::{ModelVars, VqgModel};
use crate::corpus::{Caption, QuestionType, Sentence, END, START};
use crate::error::{Error, Result};
use crate::numerics::{lstm_step_tape, softmax, Tape, Tensor, Var};

fn embed(tape: &mut Tape, vars: &ModelVars, token: usize) -> Result<Var> {
    tape.gather_col(vars.embedding, token)
}

/// Selector logits: run the selector LSTM over the caption embeddings (no
/// image input), project the final hidden state.
pub fn type_logits(tape: &mut Tape, vars: &ModelVars, caption: &Sentence) -> Result<Var> {
    if caption.is_empty() {
        return Err(Error::invalid("type_logits of an empty caption"));
    }
    let mut state = crate::numerics::LstmStateVars::zeros(tape, vars.hidden_size);
    for &tok in caption {
        let x = embed(tape, vars, tok)?;
        state = lstm_step_tape(tape, &vars.selector_lstm, x, &state)?;
    }
    let lin = tape.matvec(vars.selector_proj_weight, state.hidden)?;
    tape.add(lin, vars.selector_proj_bias)
}

/// `P(t | caption)` over the six sampleable types.
pub fn type_probabilities(model: &VqgModel, caption: &Sentence) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let logits = type_logits(&mut tape, &vars, caption)?;
    Ok(softmax(tape.value(logits))?.data().to_vec())
}

/// Caption embedding: the encoder reads the image feature at step 0
/// (state zero-initialized), the START token at step 1, then the caption
/// tokens, and yields the final memory state.
pub fn encode(
    tape: &mut Tape,
    vars: &ModelVars,
    image_feature: Var,
    caption: &Sentence,
) -> Result<Var> {
    let mut state = crate::numerics::LstmStateVars::zeros(tape, vars.hidden_size);
    state = lstm_step_tape(tape, &vars.encoder, image_feature, &state)?;
    let start = embed(tape, vars, START)?;
    state = lstm_step_tape(tape, &vars.encoder, start, &state)?;
    for &tok in caption {
        let x = embed(tape, vars, tok)?;
        state = lstm_step_tape(tape, &vars.encoder, x, &state)?;
    }
    Ok(state.memory)
}

/// Joint feature map: `PReLU(W [caption_embedding; image_feature] + b)`.
pub fn correlate(
    tape: &mut Tape,
    vars: &ModelVars,
    caption_embedding: Var,
    image_feature: Var,
) -> Result<Var> {
    let joined = tape.concat(caption_embedding, image_feature)?;
    let lin = tape.matvec(vars.corr_weight, joined)?;
    let biased = tape.add(lin, vars.corr_bias)?;
    tape.prelu(biased, vars.corr_slope)
}

/// Stepwise decoder over one question. The first input must be the joint
/// feature map, then the START token, then emitted tokens; each input
/// from START onward yields the logits predicting the next word.
#[derive(Clone)]
pub struct DecoderSession {
    state: crate::numerics::LstmStateVars,
    fed_feature: bool,
}

impl DecoderSession {
    pub fn start(tape: &mut Tape, vars: &ModelVars) -> Self {
        DecoderSession {
            state: crate::numerics::LstmStateVars::zeros(tape, vars.hidden_size),
            fed_feature: false,
        }
    }

    pub fn feed_feature_map(
        &mut self,
        tape: &mut Tape,
        vars: &ModelVars,
        feature_map: Var,
    ) -> Result<()> {
        if self.fed_feature {
            return Err(Error::invalid("feature map fed twice"));
        }
        self.state = lstm_step_tape(tape, &vars.decoder, feature_map, &self.state)?;
        self.fed_feature = true;
        Ok(())
    }

    /// Feeds one token and returns the next-word logits.
    pub fn feed_token(&mut self, tape: &mut Tape, vars: &ModelVars, token: usize) -> Result<Var> {
        if !self.fed_feature {
            return Err(Error::invalid(
                "decoder token fed before the joint feature map",
            ));
        }
        let x = embed(tape, vars, token)?;
        self.state = lstm_step_tape(tape, &vars.decoder, x, &self.state)?;
        let lin = tape.matvec(vars.proj_weight, self.state.hidden)?;
        tape.add(lin, vars.proj_bias)
    }
}

/// Teacher-forced negative log-likelihood of `question` (all tokens plus
/// the closing END), as a scalar tape node.
pub fn question_nll(
    tape: &mut Tape,
    vars: &ModelVars,
    image_feature: Var,
    caption: &Sentence,
    question: &Sentence,
) -> Result<Var> {
    if question.is_empty() {
        return Err(Error::invalid("question_nll of an empty question"));
    }
    let emb = encode(tape, vars, image_feature, caption)?;
    let fm = correlate(tape, vars, emb, image_feature)?;
    let mut session = DecoderSession::start(tape, vars);
    session.feed_feature_map(tape, vars, fm)?;

    let mut nll: Option<Var> = None;
    let mut prev = START;
    for &gold in question.iter().chain(std::iter::once(&END)) {
        let logits = session.feed_token(tape, vars, prev)?;
        let step_nll = tape.cross_entropy_logits(logits, gold)?;
        nll = Some(match nll {
            Some(acc) => tape.add(acc, step_nll)?,
            None => step_nll,
        });
        prev = gold;
    }
    Ok(nll.expect("non-empty question"))
}

/// `-[log P(q | c, x, t) + log P(t | c)]` as a scalar tape node: the
/// per-instance training objective before weighting. The question term
/// conditions on the type by teacher-forcing the keyword as the first
/// decoded token (questions start with their type keyword).
pub fn instance_nll(
    tape: &mut Tape,
    vars: &ModelVars,
    image_feature: Var,
    caption: &Sentence,
    qtype: QuestionType,
    question: &Sentence,
) -> Result<Var> {
    let type_index = qtype
        .index()
        .ok_or_else(|| Error::invalid("OTHER-type question in training objective"))?;
    let q_nll = question_nll(tape, vars, image_feature, caption, question)?;
    let logits = type_logits(tape, vars, caption)?;
    let t_nll = tape.cross_entropy_logits(logits, type_index)?;
    tape.add(q_nll, t_nll)
}

/// One shape-aligned lane group for lockstep training: all captions share
/// one length, all questions share one length.
pub struct BatchedGroup {
    pub features: Vec<Tensor>,
    pub captions: Vec<Sentence>,
    pub questions: Vec<Sentence>,
    pub type_indices: Vec<usize>,
    /// Per-lane loss coefficient (instance weight times any batch-mean
    /// normalization); constant, no gradient.
    pub coeffs: Vec<f64>,
}

impl BatchedGroup {
    fn validate(&self) -> Result<()> {
        let lanes = self.features.len();
        if lanes == 0 {
            return Err(Error::invalid("empty lane group"));
        }
        let cap_len = self.captions[0].len();
        let q_len = self.questions[0].len();
        if self.captions.len() != lanes
            || self.questions.len() != lanes
            || self.type_indices.len() != lanes
            || self.coeffs.len() != lanes
            || self.captions.iter().any(|c| c.len() != cap_len)
            || self.questions.iter().any(|q| q.len() != q_len || q.is_empty())
        {
            return Err(Error::invalid("misaligned lane group"));
        }
        Ok(())
    }

    fn feature_matrix(&self) -> Result<Tensor> {
        let lanes = self.features.len();
        let rows = self.features[0].len();
        let mut data = vec![0.0; rows * lanes];
        for (b, f) in self.features.iter().enumerate() {
            if f.len() != rows {
                return Err(Error::invalid("misaligned feature lengths in lane group"));
            }
            for (r, &v) in f.data().iter().enumerate() {
                data[r * lanes + b] = v;
            }
        }
        Tensor::from_vec(&[rows, lanes], data)
    }

    fn tokens_at(&self, source: impl Fn(&Sentence) -> usize) -> Vec<usize> {
        self.captions.iter().map(source).collect()
    }
}

/// Coefficient-weighted sum of `-[log P(q | c, x, t) + log P(t | c)]`
/// over a shape-aligned group, evaluated in lockstep so every weight
/// matrix streams once per time step. Gate equations and gold targets
/// match the per-instance path exactly.
pub fn group_nll(tape: &mut Tape, vars: &ModelVars, group: &BatchedGroup) -> Result<Var> {
    use crate::numerics::{lstm_state_cols, lstm_step_cols};
    group.validate()?;
    let lanes = group.features.len();
    let cap_len = group.captions[0].len();
    let q_len = group.questions[0].len();

    let features = tape.leaf(group.feature_matrix()?);
    let start_batch: Vec<usize> = vec![START; lanes];

    // caption encoder: image feature, START, caption tokens
    let mut enc = lstm_state_cols(tape, vars.hidden_size, lanes);
    enc = lstm_step_cols(tape, &vars.encoder, features, &enc)?;
    let start_emb = tape.gather_cols(vars.embedding, start_batch.clone())?;
    enc = lstm_step_cols(tape, &vars.encoder, start_emb, &enc)?;
    for t in 0..cap_len {
        let cols = group.tokens_at(|c| c[t]);
        let x = tape.gather_cols(vars.embedding, cols)?;
        enc = lstm_step_cols(tape, &vars.encoder, x, &enc)?;
    }

    // correlation module on [caption embedding; image feature]
    let joined = tape.concat_rows(enc.memory, features)?;
    let lin = tape.matmul(vars.corr_weight, joined)?;
    let biased = tape.add_row_broadcast(lin, vars.corr_bias)?;
    let fm = tape.prelu_rows(biased, vars.corr_slope)?;

    // teacher-forced decoder: feature map, START, then gold tokens
    let mut dec = lstm_state_cols(tape, vars.hidden_size, lanes);
    dec = lstm_step_cols(tape, &vars.decoder, fm, &dec)?;
    let mut prev: Vec<usize> = start_batch.clone();
    let mut total: Option<Var> = None;
    for t in 0..=q_len {
        let x = tape.gather_cols(vars.embedding, prev)?;
        dec = lstm_step_cols(tape, &vars.decoder, x, &dec)?;
        let gold: Vec<usize> = group
            .questions
            .iter()
            .map(|q| if t < q_len { q[t] } else { END })
            .collect();
        let lin = tape.matmul(vars.proj_weight, dec.hidden)?;
        let logits = tape.add_row_broadcast(lin, vars.proj_bias)?;
        let nll =
            tape.weighted_cross_entropy_cols(logits, gold.clone(), group.coeffs.clone())?;
        total = Some(match total {
            Some(acc) => tape.add(acc, nll)?,
            None => nll,
        });
        prev = gold;
    }

    // type selector over the caption tokens alone
    let mut sel = lstm_state_cols(tape, vars.hidden_size, lanes);
    for t in 0..cap_len {
        let cols = group.tokens_at(|c| c[t]);
        let x = tape.gather_cols(vars.embedding, cols)?;
        sel = lstm_step_cols(tape, &vars.selector_lstm, x, &sel)?;
    }
    let lin = tape.matmul(vars.selector_proj_weight, sel.hidden)?;
    let logits = tape.add_row_broadcast(lin, vars.selector_proj_bias)?;
    let type_nll = tape.weighted_cross_entropy_cols(
        logits,
        group.type_indices.clone(),
        group.coeffs.clone(),
    )?;
    tape.add(total.expect("at least one decode step"), type_nll)
}

/// Joint log-probability `log P(q, t, c | x, C)`: caption prior plus type
/// probability plus the teacher-forced question likelihood. The prior
/// term is constant with respect to the parameters.
pub fn joint_log_prob(
    model: &VqgModel,
    image_feature: &Tensor,
    captions: &[Caption],
    caption_index: usize,
    vocab: &crate::corpus::Vocabulary,
    qtype: QuestionType,
    question: &Sentence,
) -> Result<f64> {
    let prior = super::decode::caption_prior(captions)?;
    let caption_ids = vocab.encode_words(&captions[caption_index].words);

    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let feature = tape.leaf(image_feature.clone());
    let nll = instance_nll(&mut tape, &vars, feature, &caption_ids, qtype, question)?;
    Ok(prior[caption_index].ln() - tape.value(nll).item())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EmbeddingMatrix, EMBED_DIM, NUM_TYPES};
    use crate::numerics::softmax;
    use crate::rng::stream_rng;

    fn small_model(vocab_size: usize, hidden: usize, seed: u64) -> VqgModel {
        let mut rng = stream_rng(seed, "init");
        let embedding = EmbeddingMatrix::random(vocab_size, &mut rng);
        VqgModel::init(embedding, hidden, &mut rng)
    }

    fn feature(fill: f64) -> Tensor {
        Tensor::from_vec(&[EMBED_DIM], vec![fill; EMBED_DIM]).unwrap()
    }

    #[test]
    fn type_probabilities_normalize_and_zero_model_is_uniform() {
        let model = small_model(10, 4, 5);
        let p = type_probabilities(&model, &vec![3, 4, 5]).unwrap();
        assert_eq!(p.len(), NUM_TYPES);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x > 0.0));

        let zero = VqgModel::zeros(10, 4);
        let p = type_probabilities(&zero, &vec![3]).unwrap();
        for &x in &p {
            assert!((x - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_encodes_to_zero() {
        let model = VqgModel::zeros(8, 3);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f = tape.leaf(feature(0.7));
        let emb = encode(&mut tape, &vars, f, &vec![3, 4]).unwrap();
        assert!(tape.value(emb).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encoding_is_sensitive_to_caption_and_image() {
        let model = small_model(10, 6, 2);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f1 = tape.leaf(feature(0.5));
        let f2 = tape.leaf(feature(-0.5));
        let e_cap_a = encode(&mut tape, &vars, f1, &vec![3, 4]).unwrap();
        let e_cap_b = encode(&mut tape, &vars, f1, &vec![5, 6]).unwrap();
        let e_img_b = encode(&mut tape, &vars, f2, &vec![3, 4]).unwrap();
        assert_ne!(tape.value(e_cap_a).data(), tape.value(e_cap_b).data());
        // image-first reading: same caption, different image, different embedding
        assert_ne!(tape.value(e_cap_a).data(), tape.value(e_img_b).data());
    }

    #[test]
    fn correlate_identity_block_returns_caption_embedding() {
        let hidden = EMBED_DIM; // identity block needs square caption part
        let mut model = VqgModel::zeros(5, hidden);
        // W = [I | 0], slope 1 (so PReLU is the identity map)
        let w = model.generator.corr_weight.data_mut();
        let cols = hidden + EMBED_DIM;
        for r in 0..EMBED_DIM {
            w[r * cols + r] = 1.0;
        }
        model.generator.corr_slope.fill(1.0);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let cap_emb = tape.leaf(Tensor::uniform(
            &[hidden],
            -1.0,
            1.0,
            &mut stream_rng(4, "t"),
        ));
        let img = tape.leaf(feature(0.9));
        let out = correlate(&mut tape, &vars, cap_emb, img).unwrap();
        assert_eq!(tape.value(out).data(), tape.value(cap_emb).data());
    }

    #[test]
    fn correlate_zero_weights_zero_output() {
        let model = VqgModel::zeros(5, 4);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let cap_emb = tape.leaf(Tensor::vector(vec![1.0, -2.0, 3.0, 0.5]));
        let img = tape.leaf(feature(1.0));
        let out = correlate(&mut tape, &vars, cap_emb, img).unwrap();
        assert!(tape.value(out).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decoder_requires_feature_map_first() {
        let model = small_model(10, 4, 9);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let mut session = DecoderSession::start(&mut tape, &vars);
        assert!(session.feed_token(&mut tape, &vars, START).is_err());
    }

    #[test]
    fn decoder_distributions_normalize_and_zero_model_is_uniform() {
        let model = VqgModel::zeros(10, 4);
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f = tape.leaf(feature(0.3));
        let emb = encode(&mut tape, &vars, f, &vec![3]).unwrap();
        let fm = correlate(&mut tape, &vars, emb, f).unwrap();
        let mut session = DecoderSession::start(&mut tape, &vars);
        session.feed_feature_map(&mut tape, &vars, fm).unwrap();
        for tok in [START, 3, 4] {
            let logits = session.feed_token(&mut tape, &vars, tok).unwrap();
            let dist = softmax(tape.value(logits)).unwrap();
            let sum: f64 = dist.data().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for &p in dist.data() {
                assert!((p - 0.1).abs() < 1e-12); // uniform 1/K, K = 10
            }
        }
    }

    #[test]
    fn teacher_forced_nll_is_sum_of_step_terms() {
        let model = small_model(12, 5, 13);
        let question = vec![3, 7, 4];
        let caption = vec![5, 6];
        let img = feature(0.2);

        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f = tape.leaf(img.clone());
        let total = question_nll(&mut tape, &vars, f, &caption, &question).unwrap();
        let total = tape.value(total).item();

        // recompute stepwise from the exposed decoder distributions
        let mut tape2 = Tape::new();
        let vars2 = model.register(&mut tape2);
        let f2 = tape2.leaf(img);
        let emb = encode(&mut tape2, &vars2, f2, &caption).unwrap();
        let fm = correlate(&mut tape2, &vars2, emb, f2).unwrap();
        let mut session = DecoderSession::start(&mut tape2, &vars2);
        session.feed_feature_map(&mut tape2, &vars2, fm).unwrap();
        let mut manual = 0.0;
        let mut prev = START;
        for &gold in question.iter().chain(std::iter::once(&END)) {
            let logits = session.feed_token(&mut tape2, &vars2, prev).unwrap();
            let dist = softmax(tape2.value(logits)).unwrap();
            manual -= dist.data()[gold].ln();
            prev = gold;
        }
        assert!((total - manual).abs() < 1e-12, "{total} vs {manual}");
    }

    #[test]
    fn batched_group_matches_per_instance_route() {
        // same loss and gradients through the lockstep path and the
        // per-instance path
        let model = small_model(14, 6, 31);
        let group = BatchedGroup {
            features: vec![feature(0.3), feature(-0.2), feature(0.8)],
            captions: vec![vec![3, 5, 7], vec![4, 6, 8], vec![9, 10, 3]],
            questions: vec![vec![5, 4], vec![7, 9], vec![3, 3]],
            type_indices: vec![0, 2, 5],
            coeffs: vec![0.5, 0.25, 1.0],
        };
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let batched = group_nll(&mut tape, &vars, &group).unwrap();
        let batched_val = tape.value(batched).item();
        tape.backward(batched).unwrap();
        let batched_grads = vars.grads_in_order(&tape);

        let mut manual = 0.0;
        let mut manual_grads: Option<Vec<Tensor>> = None;
        for lane in 0..3 {
            let mut t2 = Tape::new();
            let vars2 = model.register(&mut t2);
            let f = t2.leaf(group.features[lane].clone());
            let nll = instance_nll(
                &mut t2,
                &vars2,
                f,
                &group.captions[lane],
                QuestionType::from_index(group.type_indices[lane]),
                &group.questions[lane],
            )
            .unwrap();
            let scaled = t2.scale(nll, group.coeffs[lane]);
            manual += t2.value(scaled).item();
            t2.backward(scaled).unwrap();
            let lane_grads = vars2.grads_in_order(&t2);
            match &mut manual_grads {
                None => manual_grads = Some(lane_grads),
                Some(acc) => {
                    for (a, g) in acc.iter_mut().zip(&lane_grads) {
                        a.add_scaled(g, 1.0);
                    }
                }
            }
        }
        assert!(
            (batched_val - manual).abs() < 1e-9,
            "{batched_val} vs {manual}"
        );
        for (b, m) in batched_grads.iter().zip(manual_grads.unwrap().iter()) {
            for (x, y) in b.data().iter().zip(m.data()) {
                assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn joint_log_prob_composes_from_exposed_distributions() {
        let model = small_model(12, 5, 21);
        let vocab = crate::corpus::Vocabulary::build(
            &["a b c d e f g h i".to_string()],
            1,
        )
        .unwrap();
        let captions = vec![
            Caption {
                words: vec!["a".into(), "b".into()],
                confidence: 0.4,
            },
            Caption {
                words: vec!["c".into(), "d".into()],
                confidence: 1.3,
            },
        ];
        let question = vec![3, 4, 5];
        let img = feature(0.1);
        let joint = joint_log_prob(
            &model,
            &img,
            &captions,
            1,
            &vocab,
            QuestionType::What,
            &question,
        )
        .unwrap();

        // scalar recomposition
        let prior = super::super::decode::caption_prior(&captions).unwrap();
        let cap_ids = vocab.encode_words(&captions[1].words);
        let tp = type_probabilities(&model, &cap_ids).unwrap();
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f = tape.leaf(img);
        let qn = question_nll(&mut tape, &vars, f, &cap_ids, &question).unwrap();
        let manual = prior[1].ln() + tp[QuestionType::What.index().unwrap()].ln()
            - tape.value(qn).item();
        assert!((joint - manual).abs() < 1e-12);

        // single caption, point-mass prior: log P(c|C) = 0
        let single = vec![captions[1].clone()];
        let j1 = joint_log_prob(
            &model,
            &feature(0.1),
            &single,
            0,
            &vocab,
            QuestionType::What,
            &question,
        )
        .unwrap();
        let expect = tp[QuestionType::What.index().unwrap()].ln() - tape.value(qn).item();
        assert!((j1 - expect).abs() < 1e-12);
    }
}
