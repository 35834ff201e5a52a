//! `vqgen eval`: precision- and coverage-oriented metric reports plus the
//! P/R table over question counts.

use crate::io::{read_generated, write_jsonl, TOOL_VERSION};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use vqgen_core::corpus::{load_dataset, tokenize};
use vqgen_core::metrics::{
    corpus_mean, coverage_image, precision_image, Metric, MeteorMatcher,
};
use vqgen_core::model::load_checkpoint;
use vqgen_core::{Error, Result, RunConfig};

pub struct EvalArgs<'a> {
    pub generated: &'a Path,
    pub references: &'a Path,
    pub out: &'a Path,
    pub table: Option<&'a Path>,
    pub checkpoint: Option<&'a Path>,
}

struct ImageEval {
    image_id: String,
    /// Generated questions in file order (already score-sorted per image).
    generated: Vec<Vec<String>>,
    references: Vec<Vec<String>>,
}

/// Scores for the six metrics at one orientation.
type Six = [f64; 6];

fn scores_at(
    image: &ImageEval,
    n: usize,
    matcher: Option<&MeteorMatcher>,
) -> Result<(Six, Six)> {
    let top: Vec<Vec<String>> = image.generated.iter().take(n).cloned().collect();
    let mut precision = [0.0; 6];
    let mut coverage = [0.0; 6];
    for (i, metric) in Metric::ALL.iter().enumerate() {
        precision[i] = precision_image(&top, &image.references, *metric, matcher)?;
        coverage[i] = coverage_image(&top, &image.references, *metric, matcher)?;
    }
    Ok((precision, coverage))
}

fn metric_object(values: &Six) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (metric, value) in Metric::ALL.iter().zip(values) {
        map.insert(metric.name().to_string(), serde_json::json!(value));
    }
    serde_json::Value::Object(map)
}

pub fn cmd_eval(config: &RunConfig, args: &EvalArgs) -> Result<()> {
    let generated = read_generated(args.generated)?;
    let references = load_dataset(args.references)?;

    let loaded_ckpt = match args.checkpoint {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let matcher = loaded_ckpt.as_ref().map(|c| MeteorMatcher {
        embeddings: &c.model.embedding,
        vocab: &c.vocab,
    });

    // group generated questions by image, preserving file order
    let mut by_image: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for record in &generated {
        let tokens = tokenize(&record.question);
        if tokens.is_empty() {
            continue;
        }
        match index.get(&record.image_id) {
            Some(&i) => by_image[i].1.push(tokens),
            None => {
                index.insert(record.image_id.clone(), by_image.len());
                by_image.push((record.image_id.clone(), vec![tokens]));
            }
        }
    }
    let ref_questions: HashMap<&str, Vec<Vec<String>>> = references
        .iter()
        .map(|r| {
            (
                r.image_id.as_str(),
                r.questions.iter().map(|q| q.words.clone()).collect(),
            )
        })
        .collect();

    let images: Vec<ImageEval> = by_image
        .into_iter()
        .filter_map(|(image_id, generated)| {
            let references = ref_questions.get(image_id.as_str())?.clone();
            if references.is_empty() {
                return None;
            }
            Some(ImageEval {
                image_id,
                generated,
                references,
            })
        })
        .collect();
    if images.is_empty() {
        return Err(Error::invalid(
            "no image has both generated and reference questions",
        ));
    }
    let max_n = images.iter().map(|i| i.generated.len()).max().unwrap();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    // per image, per n in 1..=max_n (capped at what the image has)
    let evaluated: Result<Vec<Vec<(Six, Six)>>> = pool.install(|| {
        images
            .par_iter()
            .map(|image| {
                (1..=max_n)
                    .map(|n| scores_at(image, n.min(image.generated.len()), matcher.as_ref()))
                    .collect()
            })
            .collect()
    });
    let evaluated = evaluated?;

    // per-image JSONL report at full n, then the corpus record
    let mut values = Vec::new();
    for (image, rows) in images.iter().zip(&evaluated) {
        let (precision, coverage) = &rows[max_n - 1];
        values.push(serde_json::json!({
            "image_id": image.image_id,
            "n_generated": image.generated.len(),
            "n_references": image.references.len(),
            "precision": metric_object(precision),
            "coverage": metric_object(coverage),
        }));
    }
    let corpus_at = |n: usize, orientation: usize, metric: usize| -> f64 {
        let per_image: Vec<f64> = evaluated
            .iter()
            .map(|rows| {
                let (p, c) = &rows[n - 1];
                if orientation == 0 {
                    p[metric]
                } else {
                    c[metric]
                }
            })
            .collect();
        corpus_mean(&per_image)
    };
    let full_p: Six = std::array::from_fn(|m| corpus_at(max_n, 0, m));
    let full_c: Six = std::array::from_fn(|m| corpus_at(max_n, 1, m));
    values.push(serde_json::json!({
        "corpus": true,
        "n_images": images.len(),
        "n_questions": max_n,
        "precision": metric_object(&full_p),
        "coverage": metric_object(&full_c),
    }));
    write_jsonl(args.out, values, config)?;

    // aggregate (metric, orientation, n) table for P/R curves
    let table_path: PathBuf = match args.table {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = args.out.as_os_str().to_owned();
            p.push(".table.csv");
            PathBuf::from(p)
        }
    };
    let mut table = std::io::BufWriter::new(std::fs::File::create(&table_path)?);
    writeln!(
        table,
        "# run_config: {}",
        serde_json::to_string(&config.to_json()).expect("config serializes")
    )?;
    writeln!(table, "# tool_version: {TOOL_VERSION}")?;
    writeln!(table, "metric,orientation,n_questions,value")?;
    for (m, metric) in Metric::ALL.iter().enumerate() {
        for (o, orientation) in ["precision", "coverage"].iter().enumerate() {
            for n in 1..=max_n {
                writeln!(
                    table,
                    "{},{},{},{}",
                    metric.name(),
                    orientation,
                    n,
                    corpus_at(n, o, m)
                )?;
            }
        }
    }
    table.flush()?;
    eprintln!(
        "evaluated {} images (n up to {}), report {}, table {}",
        images.len(),
        max_n,
        args.out.display(),
        table_path.display()
    );
    Ok(())
}
