//! The LSTM cell used by the caption encoder, the question decoder and the
//! type selector.

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Packed cell parameters. `weight` is `[4H, D + H]` and acts on the
/// concatenation `[input; hidden]`; `bias` is `[4H]`. Gate packing order
/// is input, forget, output, candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmParams {
            weight: Tensor::zeros(&[4 * hidden_size, input_size + hidden_size]),
            bias: Tensor::zeros(&[4 * hidden_size]),
        }
    }

    /// Uniform init in [-0.08, 0.08], the conventional LSTM choice.
    pub fn uniform<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        LstmParams {
            weight: Tensor::uniform(&[4 * hidden_size, input_size + hidden_size], -0.08, 0.08, rng),
            bias: Tensor::zeros(&[4 * hidden_size]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.weight.shape()[0] / 4
    }

    pub fn input_size(&self) -> usize {
        self.weight.shape()[1] - self.hidden_size()
    }
}

/// Hidden and memory state of one cell. Zero-initialized at sequence start.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub hidden: Tensor,
    pub memory: Tensor,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        LstmState {
            hidden: Tensor::zeros(&[hidden_size]),
            memory: Tensor::zeros(&[hidden_size]),
        }
    }
}

/// Cell parameters registered on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LstmVars {
    pub weight: Var,
    pub bias: Var,
}

/// Cell state as tape nodes.
#[derive(Debug, Clone, Copy)]
pub struct LstmStateVars {
    pub hidden: Var,
    pub memory: Var,
}

impl LstmStateVars {
    pub fn zeros(tape: &mut Tape, hidden_size: usize) -> Self {
        LstmStateVars {
            hidden: tape.leaf(Tensor::zeros(&[hidden_size])),
            memory: tape.leaf(Tensor::zeros(&[hidden_size])),
        }
    }
}

/// One step of the standard LSTM cell on the tape: input/forget/output
/// gates with logistic sigmoid, cell candidate with tanh.
pub fn lstm_step_tape(
    tape: &mut Tape,
    params: &LstmVars,
    input: Var,
    state: &LstmStateVars,
) -> Result<LstmStateVars> {
    let h = tape.value(params.weight).shape()[0] / 4;
    let expected_in = tape.value(params.weight).shape()[1] - h;
    let got_in = tape.value(input).len();
    if got_in != expected_in {
        return Err(Error::ShapeMismatch {
            op: "lstm_step(input)",
            expected: format!("[{expected_in}]"),
            got: format!("[{got_in}]"),
        });
    }
    if tape.value(state.hidden).len() != h || tape.value(state.memory).len() != h {
        return Err(Error::ShapeMismatch {
            op: "lstm_step(state)",
            expected: format!("[{h}]"),
            got: format!(
                "hidden [{}], memory [{}]",
                tape.value(state.hidden).len(),
                tape.value(state.memory).len()
            ),
        });
    }

    let joined = tape.concat(input, state.hidden)?;
    let lin = tape.matvec(params.weight, joined)?;
    let pre = tape.add(lin, params.bias)?;

    let i_pre = tape.narrow(pre, 0, h)?;
    let f_pre = tape.narrow(pre, h, h)?;
    let o_pre = tape.narrow(pre, 2 * h, h)?;
    let g_pre = tape.narrow(pre, 3 * h, h)?;

    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let o = tape.sigmoid(o_pre);
    let g = tape.tanh(g_pre);

    let keep = tape.mul(f, state.memory)?;
    let write = tape.mul(i, g)?;
    let memory = tape.add(keep, write)?;
    let mem_act = tape.tanh(memory);
    let hidden = tape.mul(o, mem_act)?;

    Ok(LstmStateVars { hidden, memory })
}

/// Lane-batched LSTM step: `input` is `[D, B]`, state matrices are
/// `[H, B]`. Identical gate equations to [`lstm_step_tape`], evaluated
/// for all lanes with one pass over the weight matrix.
pub fn lstm_step_cols(
    tape: &mut Tape,
    params: &LstmVars,
    input: Var,
    state: &LstmStateVars,
) -> Result<LstmStateVars> {
    let h = tape.value(params.weight).shape()[0] / 4;
    let joined = tape.concat_rows(input, state.hidden)?;
    let lin = tape.matmul(params.weight, joined)?;
    let pre = tape.add_row_broadcast(lin, params.bias)?;

    let i_pre = tape.narrow_rows(pre, 0, h)?;
    let f_pre = tape.narrow_rows(pre, h, h)?;
    let o_pre = tape.narrow_rows(pre, 2 * h, h)?;
    let g_pre = tape.narrow_rows(pre, 3 * h, h)?;

    let i = tape.sigmoid(i_pre);
    let f = tape.sigmoid(f_pre);
    let o = tape.sigmoid(o_pre);
    let g = tape.tanh(g_pre);

    let keep = tape.mul(f, state.memory)?;
    let write = tape.mul(i, g)?;
    let memory = tape.add(keep, write)?;
    let mem_act = tape.tanh(memory);
    let hidden = tape.mul(o, mem_act)?;

    Ok(LstmStateVars { hidden, memory })
}

/// Zero `[H, B]` state matrices for a lane batch.
pub fn lstm_state_cols(tape: &mut Tape, hidden_size: usize, lanes: usize) -> LstmStateVars {
    LstmStateVars {
        hidden: tape.leaf(Tensor::zeros(&[hidden_size, lanes])),
        memory: tape.leaf(Tensor::zeros(&[hidden_size, lanes])),
    }
}

/// Plain-tensor convenience wrapper around [`lstm_step_tape`].
pub fn lstm_step(params: &LstmParams, input: &Tensor, state: &LstmState) -> Result<LstmState> {
    let mut tape = Tape::new();
    let vars = LstmVars {
        weight: tape.leaf(params.weight.clone()),
        bias: tape.leaf(params.bias.clone()),
    };
    let input = tape.leaf(input.clone());
    let state = LstmStateVars {
        hidden: tape.leaf(state.hidden.clone()),
        memory: tape.leaf(state.memory.clone()),
    };
    let next = lstm_step_tape(&mut tape, &vars, input, &state)?;
    Ok(LstmState {
        hidden: tape.value(next.hidden).clone(),
        memory: tape.value(next.memory).clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn zero_params_zero_state_maps_to_zero() {
        // all gates sigmoid(0) = 0.5, candidate tanh(0) = 0:
        // memory' = 0.5*0 + 0.5*0 = 0, hidden' = 0.5*tanh(0) = 0
        let params = LstmParams::zeros(3, 2);
        let state = LstmState::zeros(2);
        let next = lstm_step(&params, &Tensor::vector(vec![5.0, -2.0, 0.3]), &state).unwrap();
        assert_eq!(next.hidden.data(), &[0.0, 0.0]);
        assert_eq!(next.memory.data(), &[0.0, 0.0]);
    }

    /// Independent scalar oracle: evaluates each gate equation
    /// coordinate-by-coordinate, no tensor machinery.
    fn scalar_lstm_oracle(
        params: &LstmParams,
        input: &[f64],
        h_prev: &[f64],
        m_prev: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let h = params.hidden_size();
        let d = params.input_size();
        let w = params.weight.data();
        let b = params.bias.data();
        let pre = |row: usize| -> f64 {
            let mut acc = b[row];
            for (j, &x) in input.iter().enumerate() {
                acc += w[row * (d + h) + j] * x;
            }
            for (j, &hp) in h_prev.iter().enumerate() {
                acc += w[row * (d + h) + d + j] * hp;
            }
            acc
        };
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut hidden = vec![0.0; h];
        let mut memory = vec![0.0; h];
        for k in 0..h {
            let i = sig(pre(k));
            let f = sig(pre(h + k));
            let o = sig(pre(2 * h + k));
            let g = pre(3 * h + k).tanh();
            memory[k] = f * m_prev[k] + i * g;
            hidden[k] = o * memory[k].tanh();
        }
        (hidden, memory)
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = stream_rng(11, "lstm-oracle");
        let params = LstmParams {
            weight: Tensor::uniform(&[8, 5], -0.5, 0.5, &mut rng),
            bias: Tensor::uniform(&[8], -0.5, 0.5, &mut rng),
        };
        let input = Tensor::uniform(&[3], -1.0, 1.0, &mut rng);
        let state = LstmState {
            hidden: Tensor::uniform(&[2], -1.0, 1.0, &mut rng),
            memory: Tensor::uniform(&[2], -1.0, 1.0, &mut rng),
        };
        let next = lstm_step(&params, &input, &state).unwrap();
        let (h_ref, m_ref) =
            scalar_lstm_oracle(&params, input.data(), state.hidden.data(), state.memory.data());
        for k in 0..2 {
            assert!((next.hidden.data()[k] - h_ref[k]).abs() < 1e-12);
            assert!((next.memory.data()[k] - m_ref[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_input_accumulates_memory() {
        let mut rng = stream_rng(3, "lstm-accum");
        let params = LstmParams::uniform(3, 4, &mut rng);
        let input = Tensor::vector(vec![1.0, -0.5, 0.25]);
        let s1 = lstm_step(&params, &input, &LstmState::zeros(4)).unwrap();
        let s2 = lstm_step(&params, &input, &s1).unwrap();
        assert_ne!(s1.hidden.data(), s2.hidden.data());
        assert_ne!(s1.memory.data(), s2.memory.data());
    }

    #[test]
    fn input_shape_mismatch_reports_expected() {
        let params = LstmParams::zeros(3, 2);
        let err = lstm_step(&params, &Tensor::vector(vec![1.0]), &LstmState::zeros(2))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("lstm_step(input)"), "{msg}");
        assert!(msg.contains("[3]"), "{msg}");
    }
}
