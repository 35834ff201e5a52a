//! Line-delimited artifact readers and writers. Every artifact embeds the
//! resolved run config and tool version: the first record of a JSONL file
//! carries `run_config` and `tool_version` fields (readers ignore unknown
//! fields), and delimiter-separated tables carry `#`-prefixed header
//! comment lines.

use serde_json::Value;
use std::io::{BufRead, Write};
use std::path::Path;
use vqgen_core::corpus::QuestionType;
use vqgen_core::{Error, Result, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Splices provenance fields into the first record.
pub fn write_jsonl(path: &Path, mut records: Vec<Value>, config: &RunConfig) -> Result<()> {
    if let Some(Value::Object(first)) = records.first_mut() {
        first.insert("run_config".to_string(), config.to_json());
        first.insert(
            "tool_version".to_string(),
            Value::String(TOOL_VERSION.to_string()),
        );
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in &records {
        serde_json::to_writer(&mut out, record)
            .map_err(|e| Error::config(format!("serializing record: {e}")))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// One generated question as written to the output file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct GeneratedRecord {
    pub image_id: String,
    pub question: String,
    #[serde(rename = "type")]
    pub qtype: QuestionType,
    pub caption_index: usize,
    pub score: f64,
}

pub fn read_generated(path: &Path) -> Result<Vec<GeneratedRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        line: 0,
        field: "file".to_string(),
        message: e.to_string(),
    })?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: GeneratedRecord =
            serde_json::from_str(&line).map_err(|e| Error::Schema {
                path: path.display().to_string(),
                line: lineno + 1,
                field: "record".to_string(),
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}
