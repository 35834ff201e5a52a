//! Tokenization, vocabulary, embeddings, IDF statistics, dataset
//! ingestion and the synthetic dataset generator.

mod dataset;
mod embed;
mod idf;
mod synth;
mod token;
mod vocab;

pub use dataset::{
    extract_question_type, load_dataset, record_to_json, save_dataset, Caption, ImageRecord,
    Question, QuestionType, NUM_TYPES,
};
pub use embed::{load_embeddings, EmbeddingMatrix, EMBED_DIM};
pub use idf::IdfTable;
pub use synth::{generate_synthetic_dataset, TemplateBank};
pub use token::tokenize;
pub use vocab::{Sentence, Vocabulary, END, END_SURFACE, START, START_SURFACE, UNK, UNK_SURFACE};
