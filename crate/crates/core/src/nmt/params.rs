//! Trainable parameters. Every tensor is a [`Matrix`]; biases and the
//! attention vector are single-column matrices. The fixed group order
//! returned by [`ModelParams::groups`] is also the checkpoint layout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::linalg::Matrix;

pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// One LSTM layer. Gate rows are stacked input, forget, candidate, output;
/// columns are the layer input followed by the previous hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl LstmWeights {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmWeights {
            weight: Matrix::zeros(4 * hidden_dim, input_dim + hidden_dim),
            bias: Matrix::zeros(4 * hidden_dim, 1),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.weight.rows() / 4
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols() - self.hidden_dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmLayer {
    pub forward: LstmWeights,
    pub backward: LstmWeights,
}

/// Affine map followed by tanh.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Matrix,
    pub encoder: Vec<BiLstmLayer>,
    pub decoder: Vec<LstmWeights>,
    /// Projects the previous decoder state into the alignment space.
    pub attn_state: Matrix,
    /// Projects an annotation into the alignment space.
    pub attn_annotation: Matrix,
    pub attn_score: Matrix,
    /// Per decoder layer: last annotation → initial hidden state.
    pub init: Vec<Dense>,
    pub output_weight: Matrix,
    pub output_bias: Matrix,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let h = config.hidden_dim;
        let a = config.attention_dim();
        let ann = config.annotation_dim();
        let encoder = (0..config.encoder_layers)
            .map(|l| {
                let input = if l == 0 { config.embed_dim } else { ann };
                BiLstmLayer {
                    forward: LstmWeights::zeros(input, h),
                    backward: LstmWeights::zeros(input, h),
                }
            })
            .collect();
        let decoder = (0..config.decoder_layers)
            .map(|l| {
                let input = if l == 0 { config.embed_dim + ann } else { h };
                LstmWeights::zeros(input, h)
            })
            .collect();
        let init = (0..config.decoder_layers)
            .map(|_| Dense {
                weight: Matrix::zeros(h, ann),
                bias: Matrix::zeros(h, 1),
            })
            .collect();
        ModelParams {
            embedding: Matrix::zeros(config.vocab_size, config.embed_dim),
            encoder,
            decoder,
            attn_state: Matrix::zeros(a, h),
            attn_annotation: Matrix::zeros(a, ann),
            attn_score: Matrix::zeros(a, 1),
            init,
            output_weight: Matrix::zeros(config.vocab_size, config.output_input_dim()),
            output_bias: Matrix::zeros(config.vocab_size, 1),
        }
    }

    /// Uniform(−0.08, 0.08) everywhere except forget-gate biases, which
    /// start at 1.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut params = Self::zeros(config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (_, m) in params.groups_mut() {
            for x in m.as_mut_slice() {
                *x = rng.gen_range(-INIT_RANGE..INIT_RANGE);
            }
        }
        let h = config.hidden_dim;
        let forget = |lstm: &mut LstmWeights| {
            lstm.bias.as_mut_slice()[h..2 * h].iter_mut().for_each(|b| *b = FORGET_BIAS_INIT);
        };
        for layer in &mut params.encoder {
            forget(&mut layer.forward);
            forget(&mut layer.backward);
        }
        params.decoder.iter_mut().for_each(forget);
        params
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, v: f64) {
        for (_, m) in self.groups_mut() {
            m.fill(v);
        }
    }

    /// Named parameter groups in checkpoint order.
    pub fn groups(&self) -> Vec<(String, &Matrix)> {
        let mut out: Vec<(String, &Matrix)> = vec![("embedding".into(), &self.embedding)];
        for (l, layer) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{l}.forward.weight"), &layer.forward.weight));
            out.push((format!("encoder.{l}.forward.bias"), &layer.forward.bias));
            out.push((format!("encoder.{l}.backward.weight"), &layer.backward.weight));
            out.push((format!("encoder.{l}.backward.bias"), &layer.backward.bias));
        }
        for (l, lstm) in self.decoder.iter().enumerate() {
            out.push((format!("decoder.{l}.weight"), &lstm.weight));
            out.push((format!("decoder.{l}.bias"), &lstm.bias));
        }
        out.push(("attention.state".into(), &self.attn_state));
        out.push(("attention.annotation".into(), &self.attn_annotation));
        out.push(("attention.score".into(), &self.attn_score));
        for (l, d) in self.init.iter().enumerate() {
            out.push((format!("init.{l}.weight"), &d.weight));
            out.push((format!("init.{l}.bias"), &d.bias));
        }
        out.push(("output.weight".into(), &self.output_weight));
        out.push(("output.bias".into(), &self.output_bias));
        out
    }

    pub fn groups_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out: Vec<(String, &mut Matrix)> = vec![("embedding".into(), &mut self.embedding)];
        for (l, layer) in self.encoder.iter_mut().enumerate() {
            out.push((format!("encoder.{l}.forward.weight"), &mut layer.forward.weight));
            out.push((format!("encoder.{l}.forward.bias"), &mut layer.forward.bias));
            out.push((format!("encoder.{l}.backward.weight"), &mut layer.backward.weight));
            out.push((format!("encoder.{l}.backward.bias"), &mut layer.backward.bias));
        }
        for (l, lstm) in self.decoder.iter_mut().enumerate() {
            out.push((format!("decoder.{l}.weight"), &mut lstm.weight));
            out.push((format!("decoder.{l}.bias"), &mut lstm.bias));
        }
        out.push(("attention.state".into(), &mut self.attn_state));
        out.push(("attention.annotation".into(), &mut self.attn_annotation));
        out.push(("attention.score".into(), &mut self.attn_score));
        for (l, d) in self.init.iter_mut().enumerate() {
            out.push((format!("init.{l}.weight"), &mut d.weight));
            out.push((format!("init.{l}.bias"), &mut d.bias));
        }
        out.push(("output.weight".into(), &mut self.output_weight));
        out.push(("output.bias".into(), &mut self.output_bias));
        out
    }

    pub fn num_params(&self) -> usize {
        self.groups().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    pub fn global_norm(&self) -> f64 {
        self.groups().iter().map(|(_, m)| m.sum_squares()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|(_, m)| m.is_finite())
    }

    /// `self += a · other`; both must come from the same config.
    pub fn add_scaled(&mut self, a: f64, other: &ModelParams) {
        let theirs = other.groups();
        for ((_, mine), (_, their)) in self.groups_mut().into_iter().zip(theirs) {
            mine.add_scaled(a, their);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for (_, m) in self.groups_mut() {
            m.scale(a);
        }
    }

    /// True when the tensor shapes agree with `config`.
    pub fn matches(&self, config: &ModelConfig) -> bool {
        let reference = ModelParams::zeros(config);
        let a = self.groups();
        let b = reference.groups();
        a.len() == b.len() && a.iter().zip(&b).all(|((na, ma), (nb, mb))| na == nb && ma.shape() == mb.shape())
    }
}
