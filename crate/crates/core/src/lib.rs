//! Grounded visual question generation at desk scale.
//!
//! Given image feature vectors and confidence-scored region captions, the
//! pipeline samples question types, generates type-constrained questions
//! with an LSTM encoder-decoder fused with a Kneser-Ney bigram language
//! model, trains with latent caption-question alignment weights, and
//! evaluates with precision- and coverage-oriented n-gram metrics.

pub mod align;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod model;
pub mod ngram;
pub mod numerics;
pub mod rng;
pub mod train;

pub use config::RunConfig;
pub use corpus::{Caption, ImageRecord, Question, QuestionType, Sentence, Vocabulary};
pub use error::{Error, Result};
pub use model::{Checkpoint, DecodeConfig, GeneratedQuestion, TypeSelection, VqgModel};
pub use ngram::KneserNeyModel;
pub use numerics::Tensor;
