//! Run configuration: every tunable with its default, parsed from a flat
//! `key = value` file with flag overrides. Unknown keys are rejected; the
//! resolved config is serialized into every output artifact.

use crate::error::{Error, Result};
use crate::model::{DecodeConfig, TypeSelection};
use crate::numerics::AdamConfig;
use crate::train::{CaptionDraw, TrainConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub kn_discount: f64,
    pub k_fixed: usize,
    pub beam_width: usize,
    pub max_len: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub validation_fraction: f64,
    pub n_questions: usize,
    pub workers: usize,
    pub type_mode: TypeSelection,
    pub caption_draw: CaptionDraw,
    pub embeddings: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            alpha: 0.75,
            beta: 0.25,
            kn_discount: 0.75,
            k_fixed: 1,
            beam_width: 3,
            max_len: 20,
            hidden_size: 300,
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 64,
            min_count: 1,
            validation_fraction: 0.1,
            n_questions: 3,
            workers: 1,
            type_mode: TypeSelection::Sample,
            caption_draw: CaptionDraw::Uniform,
            embeddings: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::config(format!("key `{key}`: cannot parse `{value}`"))
    })
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "kn_discount" => self.kn_discount = parse(key, value)?,
            "k_fixed" => self.k_fixed = parse(key, value)?,
            "beam_width" => self.beam_width = parse(key, value)?,
            "max_len" => self.max_len = parse(key, value)?,
            "hidden_size" => self.hidden_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "min_count" => self.min_count = parse(key, value)?,
            "validation_fraction" => self.validation_fraction = parse(key, value)?,
            "n_questions" => self.n_questions = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "type_mode" => {
                self.type_mode = match value {
                    "sample" => TypeSelection::Sample,
                    "top_distinct" => TypeSelection::TopDistinct,
                    other => {
                        return Err(Error::config(format!(
                            "key `type_mode`: expected sample|top_distinct, got `{other}`"
                        )))
                    }
                }
            }
            "caption_draw" => {
                self.caption_draw = match value {
                    "uniform" => CaptionDraw::Uniform,
                    "prior" => CaptionDraw::Prior,
                    other => {
                        return Err(Error::config(format!(
                            "key `caption_draw`: expected uniform|prior, got `{other}`"
                        )))
                    }
                }
            }
            "embeddings" => {
                self.embeddings = if value.is_empty() {
                    None
                } else {
                    Some(value.to_string())
                }
            }
            unknown => {
                return Err(Error::config(format!("unknown config key `{unknown}`")));
            }
        }
        Ok(())
    }

    /// Parses a flat config file: one `key = value` per line, `#` comments
    /// and blank lines ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_file(path)?;
        Ok(config)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                )));
            };
            self.set(key.trim(), value)
                .map_err(|e| Error::config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.to_train_config().validate()?;
        self.decode_config(crate::corpus::QuestionType::What, 0)
            .validate()?;
        if self.workers < 1 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        if self.n_questions < 1 {
            return Err(Error::invalid("n_questions must be >= 1"));
        }
        Ok(())
    }

    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam: AdamConfig {
                lr: self.learning_rate,
                ..AdamConfig::default()
            },
            seed: self.seed,
            alpha: self.alpha,
            kn_discount: self.kn_discount,
            hidden_size: self.hidden_size,
            min_count: self.min_count,
            validation_fraction: self.validation_fraction,
            caption_draw: self.caption_draw,
            embeddings_path: self.embeddings.clone().map(Into::into),
        }
    }

    pub fn decode_config(
        &self,
        qtype: crate::corpus::QuestionType,
        seed: u64,
    ) -> DecodeConfig {
        DecodeConfig {
            qtype,
            beta: self.beta,
            k_fixed: self.k_fixed,
            beam_width: self.beam_width,
            max_len: self.max_len,
            seed,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("RunConfig serializes")
    }
}
