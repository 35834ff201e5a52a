//! The generative model: caption prior, question-type selector, caption
//! encoder with image-first reading, correlation module, and the LSTM
//! decoder with bigram fusion and type-constrained beam decoding.

mod checkpoint;
mod decode;
mod forward;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainerState};
pub use decode::{
    caption_prior, decode_question, fuse, generate, sample_caption, sample_type, top_k_types,
    DecodeConfig, GeneratedQuestion, TypeSelection,
};
pub use forward::{
    correlate, encode, group_nll, instance_nll, joint_log_prob, question_nll, type_logits,
    type_probabilities, BatchedGroup, DecoderSession,
};
pub use params::{GeneratorParams, ModelVars, SelectorParams, VqgModel};
