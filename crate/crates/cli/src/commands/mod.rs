mod eval;
mod generate;
mod stats;
mod synth;
mod train;

pub use eval::{cmd_eval, EvalArgs};
pub use generate::{cmd_generate, GenerateArgs};
pub use stats::cmd_stats;
pub use synth::cmd_synth;
pub use train::{cmd_train, TrainArgs};
