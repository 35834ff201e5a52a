//! Image records: feature vector, confidence-scored captions, gold
//! questions. Stored on disk as one JSON object per line.

use super::embed::EMBED_DIM;
use super::token::tokenize;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// The interrogative class of a question, identified by its first word.
/// OTHER marks questions outside the six sampleable types; such records
/// are kept for data hygiene but never sampled or trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionType {
    What,
    When,
    Where,
    Who,
    Why,
    How,
    Other,
}

/// Number of sampleable types (OTHER excluded).
pub const NUM_TYPES: usize = 6;

impl QuestionType {
    pub const SAMPLEABLE: [QuestionType; NUM_TYPES] = [
        QuestionType::What,
        QuestionType::When,
        QuestionType::Where,
        QuestionType::Who,
        QuestionType::Why,
        QuestionType::How,
    ];

    pub fn keyword(&self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::When => "when",
            QuestionType::Where => "where",
            QuestionType::Who => "who",
            QuestionType::Why => "why",
            QuestionType::How => "how",
            QuestionType::Other => "other",
        }
    }

    /// Index into the selector's 6-way output; OTHER has none.
    pub fn index(&self) -> Option<usize> {
        QuestionType::SAMPLEABLE.iter().position(|t| t == self)
    }

    pub fn from_index(i: usize) -> QuestionType {
        QuestionType::SAMPLEABLE[i]
    }
}

/// Type of a question from its first word; anything but the six keywords
/// is OTHER.
pub fn extract_question_type(words: &[String]) -> QuestionType {
    match words.first().map(|s| s.as_str()) {
        Some("what") => QuestionType::What,
        Some("when") => QuestionType::When,
        Some("where") => QuestionType::Where,
        Some("who") => QuestionType::Who,
        Some("why") => QuestionType::Why,
        Some("how") => QuestionType::How,
        _ => QuestionType::Other,
    }
}

/// One region caption with its proposal confidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Caption {
    pub words: Vec<String>,
    pub confidence: f64,
}

/// One gold question, typed from its first word.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub words: Vec<String>,
    pub qtype: QuestionType,
}

/// One image: 300-dim feature vector, caption set, gold questions.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub image_id: String,
    pub feature: Tensor,
    pub captions: Vec<Caption>,
    pub questions: Vec<Question>,
}

#[derive(Serialize, Deserialize)]
struct CaptionWire {
    text: String,
    confidence: f64,
}

#[derive(Serialize, Deserialize)]
struct QuestionWire {
    text: String,
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    image_id: String,
    feature: Vec<f64>,
    captions: Vec<CaptionWire>,
    questions: Vec<QuestionWire>,
}

fn schema_err(path: &Path, line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn record_from_wire(wire: RecordWire, path: &Path, lineno: usize) -> Result<ImageRecord> {
    if wire.feature.len() != EMBED_DIM {
        return Err(schema_err(
            path,
            lineno,
            "feature",
            format!("expected {EMBED_DIM} entries, got {}", wire.feature.len()),
        ));
    }
    if !wire.feature.iter().all(|v| v.is_finite()) {
        return Err(schema_err(path, lineno, "feature", "non-finite entry"));
    }
    let mut captions = Vec::with_capacity(wire.captions.len());
    for (i, c) in wire.captions.into_iter().enumerate() {
        let words = tokenize(&c.text);
        if words.is_empty() {
            return Err(schema_err(
                path,
                lineno,
                &format!("captions[{i}].text"),
                "empty caption",
            ));
        }
        if !c.confidence.is_finite() {
            return Err(schema_err(
                path,
                lineno,
                &format!("captions[{i}].confidence"),
                "non-finite confidence",
            ));
        }
        captions.push(Caption {
            words,
            confidence: c.confidence,
        });
    }
    let mut questions = Vec::with_capacity(wire.questions.len());
    for (i, q) in wire.questions.into_iter().enumerate() {
        let words = tokenize(&q.text);
        if words.is_empty() {
            return Err(schema_err(
                path,
                lineno,
                &format!("questions[{i}].text"),
                "empty question",
            ));
        }
        let qtype = extract_question_type(&words);
        questions.push(Question { words, qtype });
    }
    Ok(ImageRecord {
        image_id: wire.image_id,
        feature: Tensor::vector(wire.feature),
        captions,
        questions,
    })
}

/// Reads a line-delimited dataset. Unknown fields are ignored; schema
/// violations report the line number and field.
pub fn load_dataset(path: &Path) -> Result<Vec<ImageRecord>> {
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
        let wire: RecordWire = serde_json::from_str(&line)
            .map_err(|e| schema_err(path, lineno + 1, "record", e.to_string()))?;
        records.push(record_from_wire(wire, path, lineno + 1)?);
    }
    Ok(records)
}

/// Serializes one record as its wire JSON object.
pub fn record_to_json(record: &ImageRecord) -> serde_json::Value {
    serde_json::json!({
        "image_id": record.image_id,
        "feature": record.feature.data(),
        "captions": record.captions.iter().map(|c| serde_json::json!({
            "text": c.words.join(" "),
            "confidence": c.confidence,
        })).collect::<Vec<_>>(),
        "questions": record.questions.iter().map(|q| serde_json::json!({
            "text": q.words.join(" "),
        })).collect::<Vec<_>>(),
    })
}

pub fn save_dataset(records: &[ImageRecord], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut out, &record_to_json(record))
            .map_err(|e| Error::config(format!("serializing record: {e}")))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
