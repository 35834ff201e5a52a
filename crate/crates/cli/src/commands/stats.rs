//! `vqgen stats`: question type and length histograms for a generated
//! file or a dataset.

use crate::io::TOOL_VERSION;
use std::io::BufRead;
use std::path::Path;
use vqgen_core::corpus::tokenize;
use vqgen_core::metrics::{entropy, length_distribution, type_distribution, type_labels};
use vqgen_core::{Error, Result, RunConfig};

/// Extracts question token lists from either artifact shape: generated
/// records (`"question"`) or dataset records (`"questions"` array).
fn questions_in_line(line: &str, path: &Path, lineno: usize) -> Result<Vec<Vec<String>>> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        line: lineno,
        field: "record".to_string(),
        message: e.to_string(),
    })?;
    if let Some(q) = value.get("question").and_then(|v| v.as_str()) {
        return Ok(vec![tokenize(q)]);
    }
    if let Some(qs) = value.get("questions").and_then(|v| v.as_array()) {
        return Ok(qs
            .iter()
            .filter_map(|q| q.get("text").and_then(|t| t.as_str()))
            .map(tokenize)
            .collect());
    }
    Err(Error::Schema {
        path: path.display().to_string(),
        line: lineno,
        field: "question".to_string(),
        message: "record has neither `question` nor `questions`".to_string(),
    })
}

pub fn cmd_stats(config: &RunConfig, input: &Path, out: Option<&Path>) -> Result<()> {
    let file = std::fs::File::open(input).map_err(|e| Error::Schema {
        path: input.display().to_string(),
        line: 0,
        field: "file".to_string(),
        message: e.to_string(),
    })?;
    let reader = std::io::BufReader::new(file);
    let mut questions: Vec<Vec<String>> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        questions.extend(questions_in_line(&line, input, lineno + 1)?);
    }

    let report = if questions.is_empty() {
        serde_json::json!({
            "n_questions": 0,
            "type_histogram": {},
            "length_histogram": {},
            "run_config": config.to_json(),
            "tool_version": TOOL_VERSION,
        })
    } else {
        let types = type_distribution(&questions);
        let mut type_map = serde_json::Map::new();
        for (label, value) in type_labels().iter().zip(types.iter()) {
            type_map.insert(label.to_string(), serde_json::json!(value));
        }
        let mut length_map = serde_json::Map::new();
        for (len, value) in length_distribution(&questions) {
            length_map.insert(len.to_string(), serde_json::json!(value));
        }
        serde_json::json!({
            "n_questions": questions.len(),
            "type_histogram": type_map,
            "type_entropy": entropy(&types),
            "length_histogram": length_map,
            "run_config": config.to_json(),
            "tool_version": TOOL_VERSION,
        })
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}
