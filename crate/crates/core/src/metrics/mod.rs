//! Text generation metrics (BLEU-1..4, ROUGE-L, METEOR-lite) and the
//! precision/coverage aggregation protocols.

mod bleu;
mod meteor;
mod protocol;
mod rouge;

pub use bleu::bleu_n;
pub use meteor::{meteor_lite, MeteorMatcher};
pub use protocol::{
    corpus_mean, coverage_image, entropy, length_distribution, precision_image, score_pair,
    type_distribution, type_labels, Metric, Orientation,
};
pub use rouge::rouge_l;
