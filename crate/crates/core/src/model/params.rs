//! Trainable parameters of the question generator and type selector.

use crate::corpus::{EmbeddingMatrix, EMBED_DIM, NUM_TYPES};
use crate::numerics::{LstmParams, LstmVars, Tape, Tensor, Var};
use rand::Rng;

/// Type-selector parameters: caption LSTM plus a 6-way output projection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorParams {
    pub lstm: LstmParams,
    /// `[NUM_TYPES, H]`
    pub proj_weight: Tensor,
    pub proj_bias: Tensor,
}

/// Question-generator parameters: caption encoder LSTM, correlation layer
/// (linear `[EMBED_DIM, H + EMBED_DIM]` plus per-channel PReLU slope),
/// decoder LSTM, and the `[K, H]` vocabulary projection.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub encoder: LstmParams,
    pub corr_weight: Tensor,
    pub corr_bias: Tensor,
    pub corr_slope: Tensor,
    pub decoder: LstmParams,
    pub proj_weight: Tensor,
    pub proj_bias: Tensor,
}

/// The full model: shared embedding matrix, selector and generator.
#[derive(Debug, Clone, PartialEq)]
pub struct VqgModel {
    pub embedding: EmbeddingMatrix,
    pub selector: SelectorParams,
    pub generator: GeneratorParams,
    pub hidden_size: usize,
}

impl VqgModel {
    /// Fresh model with weights uniform in [-0.08, 0.08]; biases start at
    /// zero and the PReLU slope at 0.25.
    pub fn init<R: Rng>(embedding: EmbeddingMatrix, hidden_size: usize, rng: &mut R) -> Self {
        let k = embedding.vocab_size();
        let h = hidden_size;
        let selector = SelectorParams {
            lstm: LstmParams::uniform(EMBED_DIM, h, rng),
            proj_weight: Tensor::uniform(&[NUM_TYPES, h], -0.08, 0.08, rng),
            proj_bias: Tensor::zeros(&[NUM_TYPES]),
        };
        let generator = GeneratorParams {
            encoder: LstmParams::uniform(EMBED_DIM, h, rng),
            corr_weight: Tensor::uniform(&[EMBED_DIM, h + EMBED_DIM], -0.08, 0.08, rng),
            corr_bias: Tensor::zeros(&[EMBED_DIM]),
            corr_slope: Tensor::from_vec(&[EMBED_DIM], vec![0.25; EMBED_DIM]).unwrap(),
            decoder: LstmParams::uniform(EMBED_DIM, h, rng),
            proj_weight: Tensor::uniform(&[k, h], -0.08, 0.08, rng),
            proj_bias: Tensor::zeros(&[k]),
        };
        VqgModel {
            embedding,
            selector,
            generator,
            hidden_size,
        }
    }

    /// All-zero parameters (testing): every distribution degenerates to
    /// uniform and every LSTM state stays zero.
    pub fn zeros(vocab_size: usize, hidden_size: usize) -> Self {
        let h = hidden_size;
        VqgModel {
            embedding: EmbeddingMatrix {
                weights: Tensor::zeros(&[EMBED_DIM, vocab_size]),
                pretrained: vec![false; vocab_size],
            },
            selector: SelectorParams {
                lstm: LstmParams::zeros(EMBED_DIM, h),
                proj_weight: Tensor::zeros(&[NUM_TYPES, h]),
                proj_bias: Tensor::zeros(&[NUM_TYPES]),
            },
            generator: GeneratorParams {
                encoder: LstmParams::zeros(EMBED_DIM, h),
                corr_weight: Tensor::zeros(&[EMBED_DIM, h + EMBED_DIM]),
                corr_bias: Tensor::zeros(&[EMBED_DIM]),
                corr_slope: Tensor::zeros(&[EMBED_DIM]),
                decoder: LstmParams::zeros(EMBED_DIM, h),
                proj_weight: Tensor::zeros(&[vocab_size, h]),
                proj_bias: Tensor::zeros(&[vocab_size]),
            },
            hidden_size,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.vocab_size()
    }

    /// Parameter tensors in their canonical (name, tensor) order. The
    /// order is the contract for optimizer state and checkpoints.
    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("embedding", &self.embedding.weights),
            ("selector.lstm.weight", &self.selector.lstm.weight),
            ("selector.lstm.bias", &self.selector.lstm.bias),
            ("selector.proj.weight", &self.selector.proj_weight),
            ("selector.proj.bias", &self.selector.proj_bias),
            ("generator.encoder.weight", &self.generator.encoder.weight),
            ("generator.encoder.bias", &self.generator.encoder.bias),
            ("generator.correlation.weight", &self.generator.corr_weight),
            ("generator.correlation.bias", &self.generator.corr_bias),
            ("generator.correlation.slope", &self.generator.corr_slope),
            ("generator.decoder.weight", &self.generator.decoder.weight),
            ("generator.decoder.bias", &self.generator.decoder.bias),
            ("generator.proj.weight", &self.generator.proj_weight),
            ("generator.proj.bias", &self.generator.proj_bias),
        ]
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("embedding", &mut self.embedding.weights),
            ("selector.lstm.weight", &mut self.selector.lstm.weight),
            ("selector.lstm.bias", &mut self.selector.lstm.bias),
            ("selector.proj.weight", &mut self.selector.proj_weight),
            ("selector.proj.bias", &mut self.selector.proj_bias),
            ("generator.encoder.weight", &mut self.generator.encoder.weight),
            ("generator.encoder.bias", &mut self.generator.encoder.bias),
            (
                "generator.correlation.weight",
                &mut self.generator.corr_weight,
            ),
            ("generator.correlation.bias", &mut self.generator.corr_bias),
            (
                "generator.correlation.slope",
                &mut self.generator.corr_slope,
            ),
            ("generator.decoder.weight", &mut self.generator.decoder.weight),
            ("generator.decoder.bias", &mut self.generator.decoder.bias),
            ("generator.proj.weight", &mut self.generator.proj_weight),
            ("generator.proj.bias", &mut self.generator.proj_bias),
        ]
    }

    /// Registers every parameter on a tape, in canonical order.
    pub fn register(&self, tape: &mut Tape) -> ModelVars {
        ModelVars {
            embedding: tape.leaf(self.embedding.weights.clone()),
            selector_lstm: LstmVars {
                weight: tape.leaf(self.selector.lstm.weight.clone()),
                bias: tape.leaf(self.selector.lstm.bias.clone()),
            },
            selector_proj_weight: tape.leaf(self.selector.proj_weight.clone()),
            selector_proj_bias: tape.leaf(self.selector.proj_bias.clone()),
            encoder: LstmVars {
                weight: tape.leaf(self.generator.encoder.weight.clone()),
                bias: tape.leaf(self.generator.encoder.bias.clone()),
            },
            corr_weight: tape.leaf(self.generator.corr_weight.clone()),
            corr_bias: tape.leaf(self.generator.corr_bias.clone()),
            corr_slope: tape.leaf(self.generator.corr_slope.clone()),
            decoder: LstmVars {
                weight: tape.leaf(self.generator.decoder.weight.clone()),
                bias: tape.leaf(self.generator.decoder.bias.clone()),
            },
            proj_weight: tape.leaf(self.generator.proj_weight.clone()),
            proj_bias: tape.leaf(self.generator.proj_bias.clone()),
            hidden_size: self.hidden_size,
        }
    }
}

/// Tape handles for one registration of [`VqgModel`] parameters.
#[derive(Debug, Clone, Copy)]
pub struct ModelVars {
    pub embedding: Var,
    pub selector_lstm: LstmVars,
    pub selector_proj_weight: Var,
    pub selector_proj_bias: Var,
    pub encoder: LstmVars,
    pub corr_weight: Var,
    pub corr_bias: Var,
    pub corr_slope: Var,
    pub decoder: LstmVars,
    pub proj_weight: Var,
    pub proj_bias: Var,
    pub hidden_size: usize,
}

impl ModelVars {
    /// Vars in the same canonical order as [`VqgModel::params`].
    pub fn in_order(&self) -> Vec<Var> {
        vec![
            self.embedding,
            self.selector_lstm.weight,
            self.selector_lstm.bias,
            self.selector_proj_weight,
            self.selector_proj_bias,
            self.encoder.weight,
            self.encoder.bias,
            self.corr_weight,
            self.corr_bias,
            self.corr_slope,
            self.decoder.weight,
            self.decoder.bias,
            self.proj_weight,
            self.proj_bias,
        ]
    }

    /// Gradients in canonical order after a backward sweep; parameters the
    /// loss never touched get zero tensors.
    pub fn grads_in_order(&self, tape: &Tape) -> Vec<Tensor> {
        self.in_order()
            .into_iter()
            .map(|v| match tape.grad(v) {
                Some(g) => g.clone(),
                None => Tensor::zeros(tape.value(v).shape()),
            })
            .collect()
    }
}
