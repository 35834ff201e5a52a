//! Dense-tensor math with reverse-mode automatic differentiation, the LSTM
//! cell, activations, Adam, and finite-difference gradient verification.

mod adam;
mod gradcheck;
mod lstm;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use lstm::{
    lstm_state_cols, lstm_step, lstm_step_cols, lstm_step_tape, LstmParams, LstmState,
    LstmStateVars, LstmVars,
};
pub use tape::{Tape, Var};
pub use tensor::{prelu, softmax, Tensor};
