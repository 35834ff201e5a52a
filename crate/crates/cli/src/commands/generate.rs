//! `vqgen generate`: decode questions for every record of a dataset.

use crate::io::{write_jsonl, GeneratedRecord};
use rayon::prelude::*;
use std::path::Path;
use vqgen_core::corpus::{load_dataset, ImageRecord};
use vqgen_core::model::{generate, load_checkpoint};
use vqgen_core::ngram::KneserNeyModel;
use vqgen_core::rng::fnv1a64;
use vqgen_core::{Error, Result, RunConfig, Vocabulary, VqgModel};

pub struct GenerateArgs<'a> {
    pub checkpoint: &'a Path,
    pub data: &'a Path,
    pub out: &'a Path,
    pub n_questions: usize,
}

fn generate_for_record(
    model: &VqgModel,
    kn: &KneserNeyModel,
    vocab: &Vocabulary,
    config: &RunConfig,
    n_questions: usize,
    record: &ImageRecord,
) -> Result<Vec<GeneratedRecord>> {
    if record.captions.is_empty() {
        return Ok(Vec::new());
    }
    // per-image seed: reordering or parallelizing images cannot shift draws
    let seed = config.seed ^ fnv1a64(record.image_id.as_bytes());
    let decode = config.decode_config(vqgen_core::QuestionType::What, seed);
    let questions = generate(
        model,
        kn,
        vocab,
        &record.feature,
        &record.captions,
        n_questions,
        &decode,
        config.type_mode,
    )?;
    Ok(questions
        .into_iter()
        .map(|q| GeneratedRecord {
            image_id: record.image_id.clone(),
            question: vocab.surface(&q.tokens),
            qtype: q.qtype,
            caption_index: q.caption_index,
            score: q.score,
        })
        .collect())
}

pub fn cmd_generate(config: &RunConfig, args: &GenerateArgs) -> Result<()> {
    config.validate()?;
    let ckpt = load_checkpoint(args.checkpoint)?;
    let stats = ckpt.bigram.ok_or_else(|| {
        Error::config("checkpoint carries no bigram statistics; re-train to generate".to_string())
    })?;
    let kn = KneserNeyModel::from_stats(stats);
    let records = load_dataset(args.data)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let per_record: Result<Vec<Vec<GeneratedRecord>>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| {
                generate_for_record(&ckpt.model, &kn, &ckpt.vocab, config, args.n_questions, r)
            })
            .collect()
    });

    let mut values = Vec::new();
    let mut total = 0usize;
    for group in per_record? {
        for record in group {
            total += 1;
            values.push(serde_json::to_value(&record).expect("record serializes"));
        }
    }
    write_jsonl(args.out, values, config)?;
    eprintln!(
        "generated {} questions for {} records into {}",
        total,
        records.len(),
        args.out.display()
    );
    Ok(())
}
