//! Weighted maximum-likelihood training: the Jensen lower bound with
//! non-parametric caption-alignment weights.

use crate::align::{AlignmentContext, SimilarityConfig};
use crate::corpus::{
    load_embeddings, EmbeddingMatrix, IdfTable, ImageRecord, QuestionType, Vocabulary, END, START,
};
use crate::error::{Error, Result};
use crate::model::{
    caption_prior, group_nll, instance_nll, BatchedGroup, Checkpoint, TrainerState, VqgModel,
};
use crate::ngram::KneserNeyModel;
use crate::numerics::{adam_step, AdamConfig, AdamState, Tape, Tensor};
use crate::rng::{fnv1a64, sample_categorical, stream_rng};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

/// How the per-instance caption is drawn each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionDraw {
    /// Uniform over the record's captions.
    Uniform,
    /// Weighted by the confidence-softmax prior.
    Prior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub alpha: f64,
    pub kn_discount: f64,
    pub hidden_size: usize,
    pub min_count: usize,
    pub validation_fraction: f64,
    pub caption_draw: CaptionDraw,
    pub embeddings_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 64,
            adam: AdamConfig::default(),
            seed: 0,
            alpha: 0.75,
            kn_discount: 0.75,
            hidden_size: 300,
            min_count: 1,
            validation_fraction: 0.1,
            caption_draw: CaptionDraw::Uniform,
            embeddings_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be >= 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::invalid("validation_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// One weighted training instance: indices into the record list plus the
/// KDE posterior weight of the drawn caption.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainInstance {
    pub record_index: usize,
    pub question_index: usize,
    pub caption_index: usize,
    pub weight: f64,
}

/// Per-epoch instance construction: one uniform (or prior-weighted)
/// caption draw per (image, question) pair, weighted by the caption
/// posterior. OTHER-type questions are excluded; weights carry no
/// gradient.
pub fn make_instances<R: Rng>(
    records: &[ImageRecord],
    indices: &[usize],
    ctx: &AlignmentContext,
    draw: CaptionDraw,
    rng: &mut R,
) -> Result<Vec<TrainInstance>> {
    let mut instances = Vec::new();
    for &ri in indices {
        let record = &records[ri];
        if record.captions.is_empty() || record.questions.is_empty() {
            continue;
        }
        let caption_words: Vec<Vec<String>> =
            record.captions.iter().map(|c| c.words.clone()).collect();
        let prior = match draw {
            CaptionDraw::Uniform => {
                vec![1.0 / record.captions.len() as f64; record.captions.len()]
            }
            CaptionDraw::Prior => caption_prior(&record.captions)?,
        };
        for (qi, question) in record.questions.iter().enumerate() {
            if question.qtype == QuestionType::Other {
                continue;
            }
            let posterior = ctx.caption_posterior(&question.words, &caption_words);
            let ci = sample_categorical(&prior, rng);
            instances.push(TrainInstance {
                record_index: ri,
                question_index: qi,
                caption_index: ci,
                weight: posterior[ci],
            });
        }
    }
    Ok(instances)
}

/// Mean over the batch of `-weight * [log P(q | c, x, t) + log P(t | c)]`.
pub fn batch_loss(
    model: &VqgModel,
    vocab: &Vocabulary,
    records: &[ImageRecord],
    batch: &[TrainInstance],
) -> Result<f64> {
    Ok(batch_pass(model, vocab, records, batch, false)?.0)
}

/// Loss plus parameter gradients in canonical order.
pub fn batch_loss_and_grads(
    model: &VqgModel,
    vocab: &Vocabulary,
    records: &[ImageRecord],
    batch: &[TrainInstance],
) -> Result<(f64, Vec<Tensor>)> {
    let (loss, grads) = batch_pass(model, vocab, records, batch, true)?;
    Ok((loss, grads.expect("gradients requested")))
}

fn batch_pass(
    model: &VqgModel,
    vocab: &Vocabulary,
    records: &[ImageRecord],
    batch: &[TrainInstance],
    with_grads: bool,
) -> Result<(f64, Option<Vec<Tensor>>)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty training batch"));
    }
    let scale = 1.0 / batch.len() as f64;

    // Lockstep evaluation: instances sharing (caption length, question
    // length) run as lanes of one matrix graph, so every weight matrix
    // streams once per time step rather than once per instance. Groups
    // are keyed and ordered deterministically.
    let mut groups: BTreeMap<(usize, usize), BatchedGroup> = BTreeMap::new();
    for instance in batch {
        if instance.weight == 0.0 {
            continue;
        }
        let record = &records[instance.record_index];
        let question = &record.questions[instance.question_index];
        let type_index = question.qtype.index().ok_or_else(|| {
            Error::invalid("OTHER-type question in training batch")
        })?;
        let caption_ids = vocab.encode_words(&record.captions[instance.caption_index].words);
        let question_ids = vocab.encode_words(&question.words);
        let group = groups
            .entry((caption_ids.len(), question_ids.len()))
            .or_insert_with(|| BatchedGroup {
                features: Vec::new(),
                captions: Vec::new(),
                questions: Vec::new(),
                type_indices: Vec::new(),
                coeffs: Vec::new(),
            });
        group.features.push(record.feature.clone());
        group.captions.push(caption_ids);
        group.questions.push(question_ids);
        group.type_indices.push(type_index);
        group.coeffs.push(instance.weight * scale);
    }

    let mut tape = Tape::new();
    let vars = model.register(&mut tape);
    let mut total_node = None;
    let mut total = 0.0;
    for group in groups.values() {
        let nll = group_nll(&mut tape, &vars, group)?;
        let value = tape.value(nll).item();
        if !value.is_finite() {
            return Err(Error::non_finite(format!(
                "loss of a {}-instance group",
                group.features.len()
            )));
        }
        total += value;
        total_node = Some(match total_node {
            None => nll,
            Some(acc) => tape.add(acc, nll)?,
        });
    }
    let grads = match (with_grads, total_node) {
        (false, _) => None,
        (true, Some(loss)) => {
            tape.backward(loss)?;
            Some(vars.grads_in_order(&tape))
        }
        // every weight was zero: gradients are identically zero
        (true, None) => Some(
            model
                .params()
                .iter()
                .map(|(_, t)| Tensor::zeros(t.shape()))
                .collect(),
        ),
    };
    Ok((total, grads))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: u64,
    pub mean_loss: f64,
    pub wall_time: f64,
}

pub struct TrainOutput {
    pub model: VqgModel,
    pub vocab: Vocabulary,
    pub kn: KneserNeyModel,
    pub idf: IdfTable,
    pub log: Vec<EpochLog>,
    pub trainer: TrainerState,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

/// Deterministic 10%-style split by image id hash.
pub fn split_by_image_id(records: &[ImageRecord], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    let threshold = (fraction * 100.0).round() as u64;
    for (i, r) in records.iter().enumerate() {
        if fnv1a64(r.image_id.as_bytes()) % 100 < threshold {
            val.push(i);
        } else {
            train.push(i);
        }
    }
    (train, val)
}

/// Builds the vocabulary (captions plus all questions, OTHER included),
/// IDF table and Kneser-Ney question model for a training split.
pub fn build_corpus_artifacts(
    records: &[ImageRecord],
    indices: &[usize],
    min_count: usize,
    kn_discount: f64,
) -> Result<(Vocabulary, IdfTable, KneserNeyModel)> {
    let mut texts = Vec::new();
    let mut documents = Vec::new();
    for &i in indices {
        for c in &records[i].captions {
            texts.push(c.words.join(" "));
            documents.push(c.words.clone());
        }
        for q in &records[i].questions {
            texts.push(q.words.join(" "));
            documents.push(q.words.clone());
        }
    }
    let vocab = Vocabulary::build(&texts, min_count)?;
    let idf = IdfTable::compute(&documents)?;
    let question_corpus: Vec<Vec<usize>> = indices
        .iter()
        .flat_map(|&i| records[i].questions.iter())
        .map(|q| {
            let mut ids = vec![START];
            ids.extend(vocab.encode_words(&q.words));
            ids.push(END);
            ids
        })
        .collect();
    let kn = KneserNeyModel::estimate(&question_corpus, vocab.size(), kn_discount)?;
    Ok((vocab, idf, kn))
}

/// Full training run from scratch.
pub fn train(records: &[ImageRecord], config: &TrainConfig) -> Result<TrainOutput> {
    train_inner(records, config, None)
}

/// Continues a checkpointed run; given the same seed and data, subsequent
/// epochs reproduce the losses of an uninterrupted run.
pub fn train_resumed(
    records: &[ImageRecord],
    config: &TrainConfig,
    checkpoint: Checkpoint,
) -> Result<TrainOutput> {
    let trainer = checkpoint.trainer.clone().ok_or_else(|| {
        Error::config("checkpoint carries no trainer state; cannot resume".to_string())
    })?;
    train_inner(records, config, Some((checkpoint.model, trainer)))
}

fn train_inner(
    records: &[ImageRecord],
    config: &TrainConfig,
    resume: Option<(VqgModel, TrainerState)>,
) -> Result<TrainOutput> {
    config.validate()?;
    let (train_indices, validation_indices) =
        split_by_image_id(records, config.validation_fraction);
    let trainable: Vec<usize> = train_indices
        .iter()
        .copied()
        .filter(|&i| {
            !records[i].captions.is_empty()
                && records[i]
                    .questions
                    .iter()
                    .any(|q| q.qtype != QuestionType::Other)
        })
        .collect();
    if trainable.is_empty() {
        return Err(Error::invalid(
            "training split has no records with captions and typed questions",
        ));
    }

    let (vocab, idf, kn) = build_corpus_artifacts(
        records,
        &train_indices,
        config.min_count,
        config.kn_discount,
    )?;

    // Instance weights use the embeddings as loaded (the pretrained
    // vectors, or their random stand-ins), frozen for the whole run; the
    // weights are constants, no gradient flows through them. Re-deriving
    // them from the init stream keeps resumed runs identical to
    // uninterrupted ones.
    let mut init_rng = stream_rng(config.seed, "init");
    let initial_embedding = match &config.embeddings_path {
        Some(path) => load_embeddings(path, &vocab, &mut init_rng)?,
        None => EmbeddingMatrix::random(vocab.size(), &mut init_rng),
    };

    let (mut model, mut adam, start_epoch) = match resume {
        Some((model, trainer)) => {
            if model.vocab_size() != vocab.size() {
                return Err(Error::config(format!(
                    "resume vocabulary mismatch: checkpoint {} words, data {}",
                    model.vocab_size(),
                    vocab.size()
                )));
            }
            (model, trainer.adam, trainer.next_epoch)
        }
        None => {
            let model =
                VqgModel::init(initial_embedding.clone(), config.hidden_size, &mut init_rng);
            let adam = AdamState::new(
                &model
                    .params()
                    .iter()
                    .map(|(_, t)| *t)
                    .collect::<Vec<&Tensor>>(),
            );
            (model, adam, 0)
        }
    };
    let alignment_embedding = initial_embedding;

    let mut log = Vec::new();
    for epoch in start_epoch..config.epochs as u64 {
        let started = Instant::now();
        let mut rng = stream_rng(config.seed, &format!("epoch-{epoch}"));
        let ctx = AlignmentContext {
            vocab: &vocab,
            idf: &idf,
            embeddings: &alignment_embedding,
            config: SimilarityConfig {
                alpha: config.alpha,
            },
        };
        let mut instances = make_instances(records, &trainable, &ctx, config.caption_draw, &mut rng)?;
        // seeded Fisher-Yates shuffle
        for i in (1..instances.len()).rev() {
            let j = rng.gen_range(0..=i);
            instances.swap(i, j);
        }

        let mut epoch_loss = 0.0;
        for batch in instances.chunks(config.batch_size) {
            let (loss, grads) = batch_loss_and_grads(&model, &vocab, records, batch)?;
            epoch_loss += loss * batch.len() as f64;
            let names: Vec<&'static str> = model.params().iter().map(|(n, _)| *n).collect();
            let mut params = model.params_mut();
            let mut param_refs: Vec<&mut Tensor> =
                params.iter_mut().map(|(_, t)| &mut **t).collect();
            let grad_refs: Vec<&Tensor> = grads.iter().collect();
            adam_step(&mut param_refs, &grad_refs, &names, &mut adam, &config.adam)?;
        }
        let mean_loss = epoch_loss / instances.len() as f64;
        log.push(EpochLog {
            epoch: epoch + 1,
            mean_loss,
            wall_time: started.elapsed().as_secs_f64(),
        });
    }

    let next_epoch = config.epochs as u64;
    Ok(TrainOutput {
        model,
        vocab,
        kn,
        idf,
        log,
        trainer: TrainerState {
            adam,
            next_epoch,
        },
        train_indices,
        validation_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_dataset, TemplateBank};

    fn synth(n: usize) -> Vec<ImageRecord> {
        generate_synthetic_dataset(7, n, &TemplateBank::default_bank()).unwrap()
    }

    fn context_for<'a>(
        vocab: &'a Vocabulary,
        idf: &'a IdfTable,
        emb: &'a EmbeddingMatrix,
    ) -> AlignmentContext<'a> {
        AlignmentContext {
            vocab,
            idf,
            embeddings: emb,
            config: SimilarityConfig::default(),
        }
    }

    #[test]
    fn single_caption_records_always_weight_one() {
        let mut records = synth(4);
        for r in &mut records {
            r.captions.truncate(1);
        }
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let emb = EmbeddingMatrix::random(vocab.size(), &mut stream_rng(1, "init"));
        let ctx = context_for(&vocab, &idf, &emb);
        let mut rng = stream_rng(2, "data");
        let instances =
            make_instances(&records, &indices, &ctx, CaptionDraw::Uniform, &mut rng).unwrap();
        assert!(!instances.is_empty());
        for inst in &instances {
            assert_eq!(inst.weight, 1.0);
            assert_eq!(inst.caption_index, 0);
        }
    }

    #[test]
    fn source_caption_posterior_above_uniform() {
        let records = synth(12);
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let emb = EmbeddingMatrix::random(vocab.size(), &mut stream_rng(1, "init"));
        let ctx = context_for(&vocab, &idf, &emb);
        for r in &records {
            let caption_words: Vec<Vec<String>> =
                r.captions.iter().map(|c| c.words.clone()).collect();
            let uniform = 1.0 / r.captions.len() as f64;
            for (qi, q) in r.questions.iter().enumerate() {
                let posterior = ctx.caption_posterior(&q.words, &caption_words);
                // question qi derives from caption qi by construction
                assert!(
                    posterior[qi] > uniform,
                    "posterior {posterior:?} for {:?}",
                    q.words
                );
            }
        }
    }

    #[test]
    fn same_seed_same_instances() {
        let records = synth(6);
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let emb = EmbeddingMatrix::random(vocab.size(), &mut stream_rng(1, "init"));
        let ctx = context_for(&vocab, &idf, &emb);
        let a = make_instances(
            &records,
            &indices,
            &ctx,
            CaptionDraw::Uniform,
            &mut stream_rng(5, "data"),
        )
        .unwrap();
        let b = make_instances(
            &records,
            &indices,
            &ctx,
            CaptionDraw::Uniform,
            &mut stream_rng(5, "data"),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn other_type_questions_excluded() {
        let mut records = synth(2);
        records[0].questions[0].words = vec!["is".into(), "it".into(), "red".into()];
        records[0].questions[0].qtype = QuestionType::Other;
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let emb = EmbeddingMatrix::random(vocab.size(), &mut stream_rng(1, "init"));
        let ctx = context_for(&vocab, &idf, &emb);
        let instances = make_instances(
            &records,
            &indices,
            &ctx,
            CaptionDraw::Uniform,
            &mut stream_rng(5, "data"),
        )
        .unwrap();
        assert!(instances
            .iter()
            .all(|i| !(i.record_index == 0 && i.question_index == 0)));
    }

    fn tiny_model_and_batch() -> (VqgModel, Vocabulary, Vec<ImageRecord>, Vec<TrainInstance>) {
        let records = synth(2);
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, _, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let mut rng = stream_rng(9, "init");
        let emb = EmbeddingMatrix::random(vocab.size(), &mut rng);
        let model = VqgModel::init(emb, 8, &mut rng);
        let batch = vec![
            TrainInstance {
                record_index: 0,
                question_index: 0,
                caption_index: 0,
                weight: 0.8,
            },
            TrainInstance {
                record_index: 1,
                question_index: 1,
                caption_index: 1,
                weight: 0.5,
            },
        ];
        (model, vocab, records, batch)
    }

    #[test]
    fn zero_weights_zero_loss_zero_grads() {
        let (model, vocab, records, mut batch) = tiny_model_and_batch();
        for inst in &mut batch {
            inst.weight = 0.0;
        }
        let (loss, grads) = batch_loss_and_grads(&model, &vocab, &records, &batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads
            .iter()
            .all(|g| g.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn unit_weight_single_instance_is_plain_nll() {
        let (model, vocab, records, batch) = tiny_model_and_batch();
        let mut single = vec![batch[0].clone()];
        single[0].weight = 1.0;
        let loss = batch_loss(&model, &vocab, &records, &single).unwrap();

        let record = &records[0];
        let q = &record.questions[0];
        let mut tape = Tape::new();
        let vars = model.register(&mut tape);
        let f = tape.leaf(record.feature.clone());
        let nll = instance_nll(
            &mut tape,
            &vars,
            f,
            &vocab.encode_words(&record.captions[0].words),
            q.qtype,
            &vocab.encode_words(&q.words),
        )
        .unwrap();
        assert!((loss - tape.value(nll).item()).abs() < 1e-12);
    }

    #[test]
    fn doubling_weights_doubles_loss_and_grads() {
        let (model, vocab, records, batch) = tiny_model_and_batch();
        let (l1, g1) = batch_loss_and_grads(&model, &vocab, &records, &batch).unwrap();
        let doubled: Vec<TrainInstance> = batch
            .iter()
            .map(|i| TrainInstance {
                weight: i.weight * 2.0,
                ..i.clone()
            })
            .collect();
        let (l2, g2) = batch_loss_and_grads(&model, &vocab, &records, &doubled).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-9, "{l2} vs {}", 2.0 * l1);
        for (a, b) in g1.iter().zip(&g2) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((y - 2.0 * x).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn one_small_step_decreases_batch_loss() {
        let (mut model, vocab, records, batch) = tiny_model_and_batch();
        let (before, grads) = batch_loss_and_grads(&model, &vocab, &records, &batch).unwrap();
        let names: Vec<&'static str> = model.params().iter().map(|(n, _)| *n).collect();
        let mut adam = AdamState::new(
            &model
                .params()
                .iter()
                .map(|(_, t)| *t)
                .collect::<Vec<&Tensor>>(),
        );
        let cfg = AdamConfig {
            lr: 1e-5,
            ..AdamConfig::default()
        };
        let mut params = model.params_mut();
        let mut param_refs: Vec<&mut Tensor> = params.iter_mut().map(|(_, t)| &mut **t).collect();
        let grad_refs: Vec<&Tensor> = grads.iter().collect();
        adam_step(&mut param_refs, &grad_refs, &names, &mut adam, &cfg).unwrap();
        drop(params);
        let after = batch_loss(&model, &vocab, &records, &batch).unwrap();
        assert!(after < before, "loss {before} -> {after}");
    }

    #[test]
    fn weights_one_single_caption_equals_plain_seq2seq_loss() {
        let mut records = synth(3);
        for r in &mut records {
            r.captions.truncate(1);
        }
        let indices: Vec<usize> = (0..records.len()).collect();
        let (vocab, idf, _) = build_corpus_artifacts(&records, &indices, 1, 0.75).unwrap();
        let mut rng = stream_rng(4, "init");
        let emb = EmbeddingMatrix::random(vocab.size(), &mut rng);
        let model = VqgModel::init(emb, 8, &mut rng);
        let ctx = context_for(&vocab, &idf, &model.embedding);
        let instances = make_instances(
            &records,
            &indices,
            &ctx,
            CaptionDraw::Uniform,
            &mut stream_rng(6, "data"),
        )
        .unwrap();
        let weighted = batch_loss(&model, &vocab, &records, &instances).unwrap();

        // plain mean NLL over the same instances
        let mut manual = 0.0;
        for inst in &instances {
            let r = &records[inst.record_index];
            let q = &r.questions[inst.question_index];
            let mut tape = Tape::new();
            let vars = model.register(&mut tape);
            let f = tape.leaf(r.feature.clone());
            let nll = instance_nll(
                &mut tape,
                &vars,
                f,
                &vocab.encode_words(&r.captions[0].words),
                q.qtype,
                &vocab.encode_words(&q.words),
            )
            .unwrap();
            manual += tape.value(nll).item();
        }
        manual /= instances.len() as f64;
        assert!((weighted - manual).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let records = synth(5);
        let config = TrainConfig {
            epochs: 2,
            hidden_size: 8,
            batch_size: 8,
            validation_fraction: 0.0,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&records, &config).unwrap();
        let b = train(&records, &config).unwrap();
        assert_eq!(a.model, b.model);
        let la: Vec<f64> = a.log.iter().map(|e| e.mean_loss).collect();
        let lb: Vec<f64> = b.log.iter().map(|e| e.mean_loss).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn resume_reproduces_continuous_losses() {
        let records = synth(5);
        let base = TrainConfig {
            hidden_size: 8,
            batch_size: 8,
            validation_fraction: 0.0,
            seed: 13,
            ..TrainConfig::default()
        };
        let full = train(
            &records,
            &TrainConfig {
                epochs: 4,
                ..base.clone()
            },
        )
        .unwrap();
        let half = train(
            &records,
            &TrainConfig {
                epochs: 2,
                ..base.clone()
            },
        )
        .unwrap();
        let ckpt = Checkpoint {
            config: serde_json::json!({}),
            vocab: half.vocab.clone(),
            model: half.model.clone(),
            bigram: None,
            trainer: Some(half.trainer.clone()),
        };
        let resumed = train_resumed(
            &records,
            &TrainConfig {
                epochs: 4,
                ..base
            },
            ckpt,
        )
        .unwrap();
        let full_tail: Vec<f64> = full.log[2..].iter().map(|e| e.mean_loss).collect();
        let resumed_losses: Vec<f64> = resumed.log.iter().map(|e| e.mean_loss).collect();
        assert_eq!(full_tail, resumed_losses);
        assert_eq!(full.model, resumed.model);
    }

    #[test]
    fn empty_training_split_rejected() {
        let config = TrainConfig::default();
        assert!(train(&[], &config).is_err());
    }
}
