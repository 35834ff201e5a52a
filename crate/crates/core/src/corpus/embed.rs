//! Word embedding matrix, optionally seeded from a pretrained file.

use super::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use std::path::Path;

/// Embedding width; matches the pretrained-vector and image-feature width.
pub const EMBED_DIM: usize = 300;

/// `EMBED_DIM x K` matrix whose column `id` embeds vocabulary word `id`.
/// Each column records whether it came from the pretrained file or was
/// randomly initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub weights: Tensor,
    pub pretrained: Vec<bool>,
}

impl EmbeddingMatrix {
    /// All columns uniform in [-0.08, 0.08] from the run seed.
    pub fn random<R: Rng>(vocab_size: usize, rng: &mut R) -> Self {
        EmbeddingMatrix {
            weights: Tensor::uniform(&[EMBED_DIM, vocab_size], -0.08, 0.08, rng),
            pretrained: vec![false; vocab_size],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn matched_count(&self) -> usize {
        self.pretrained.iter().filter(|&&p| p).count()
    }

    /// Copy of the embedding column for word `id`.
    pub fn column(&self, id: usize) -> Vec<f64> {
        let k = self.vocab_size();
        (0..EMBED_DIM)
            .map(|r| self.weights.data()[r * k + id])
            .collect()
    }

    fn set_column(&mut self, id: usize, values: &[f64]) {
        let k = self.vocab_size();
        for (r, &v) in values.iter().enumerate() {
            self.weights.data_mut()[r * k + id] = v;
        }
    }
}

/// Loads pretrained vectors for in-vocabulary words; every other column
/// (reserved tokens included) is initialized uniform [-0.08, 0.08] from
/// `rng`. File format: one entry per line, token then `EMBED_DIM` decimal
/// numbers, single-space separated.
pub fn load_embeddings<R: Rng>(
    path: &Path,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<EmbeddingMatrix> {
    let mut matrix = EmbeddingMatrix::random(vocab.size(), rng);
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or("");
        let values: Vec<&str> = fields.collect();
        if values.len() != EMBED_DIM {
            return Err(Error::Schema {
                path: path.display().to_string(),
                line: lineno + 1,
                field: "vector".to_string(),
                message: format!("expected {EMBED_DIM} values, got {}", values.len()),
            });
        }
        let mut parsed = Vec::with_capacity(EMBED_DIM);
        for (i, v) in values.iter().enumerate() {
            parsed.push(v.parse::<f64>().map_err(|e| Error::Schema {
                path: path.display().to_string(),
                line: lineno + 1,
                field: format!("vector[{i}]"),
                message: e.to_string(),
            })?);
        }
        if vocab.contains(word) {
            let id = vocab.id(word);
            matrix.set_column(id, &parsed);
            matrix.pretrained[id] = true;
        }
    }
    Ok(matrix)
}
