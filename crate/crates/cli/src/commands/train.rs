//! `vqgen train`: weighted maximum-likelihood training with checkpoint
//! and log output.

use crate::io::{write_jsonl, TOOL_VERSION};
use std::path::{Path, PathBuf};
use vqgen_core::corpus::load_dataset;
use vqgen_core::model::{load_checkpoint, save_checkpoint, Checkpoint};
use vqgen_core::ngram::KneserNeyModel;
use vqgen_core::train::{train, train_resumed, TrainOutput};
use vqgen_core::{Error, Result, RunConfig};

pub struct TrainArgs<'a> {
    pub data: &'a Path,
    pub out: &'a Path,
    pub log: Option<&'a Path>,
    pub resume: Option<&'a Path>,
    pub dump_counts: Option<&'a Path>,
}

pub fn cmd_train(config: &RunConfig, args: &TrainArgs) -> Result<()> {
    config.validate()?;
    if !args.data.exists() {
        return Err(Error::Schema {
            path: args.data.display().to_string(),
            line: 0,
            field: "file".to_string(),
            message: "training file not found".to_string(),
        });
    }
    let records = load_dataset(args.data)?;
    let train_config = config.to_train_config();
    let output: TrainOutput = match args.resume {
        Some(path) => train_resumed(&records, &train_config, load_checkpoint(path)?)?,
        None => train(&records, &train_config)?,
    };

    let checkpoint = Checkpoint {
        config: serde_json::json!({
            "run_config": config.to_json(),
            "tool_version": TOOL_VERSION,
        }),
        vocab: output.vocab.clone(),
        model: output.model,
        bigram: Some(output.kn.stats().clone()),
        trainer: Some(output.trainer),
    };
    save_checkpoint(&checkpoint, args.out)?;

    let log_path: PathBuf = match args.log {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = args.out.as_os_str().to_owned();
            p.push(".log.jsonl");
            PathBuf::from(p)
        }
    };
    let log_values = output
        .log
        .iter()
        .map(|e| {
            serde_json::json!({
                "epoch": e.epoch,
                "mean_loss": e.mean_loss,
                "wall_time": e.wall_time,
            })
        })
        .collect();
    write_jsonl(&log_path, log_values, config)?;

    if let Some(path) = args.dump_counts {
        let kn = KneserNeyModel::from_stats(checkpoint.bigram.clone().expect("stats present"));
        let mut buf = Vec::new();
        kn.dump_counts(&output.vocab, &mut buf)?;
        std::fs::write(path, buf)?;
    }

    if let Some(last) = output.log.last() {
        eprintln!(
            "trained {} epochs, final mean loss {:.6}, checkpoint {}",
            output.log.len(),
            last.mean_loss,
            args.out.display()
        );
    }
    Ok(())
}
