//! Single LSTM cell with its reverse-mode derivative.

use super::linalg::{concat, sigmoid};
use super::params::LstmWeights;
use crate::error::{Error, Result};

/// Values saved by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    /// Layer input followed by the previous hidden state.
    input: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates: input, forget, candidate, output.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Standard LSTM step:
/// `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')` with sigmoid gates `i, f, o`
/// and tanh candidate `g`.
pub fn lstm_step(x: &[f64], h: &[f64], c: &[f64], weights: &LstmWeights) -> Result<(Vec<f64>, Vec<f64>)> {
    let hd = weights.hidden_dim();
    if weights.weight.rows() != 4 * hd || weights.bias.rows() != 4 * hd {
        return Err(Error::Dimension("LSTM weight rows must be 4 × hidden".into()));
    }
    if x.len() != weights.input_dim() || h.len() != hd || c.len() != hd {
        return Err(Error::Dimension(format!(
            "LSTM expects input {}, hidden {hd}; got input {}, hidden {}, cell {}",
            weights.input_dim(),
            x.len(),
            h.len(),
            c.len()
        )));
    }
    let (h, c, _) = forward(weights, x, h, c);
    Ok((h, c))
}

pub(crate) fn forward(w: &LstmWeights, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>, LstmCache) {
    let hd = w.hidden_dim();
    let input = concat(&[x, h_prev]);
    let mut gates = w.bias.as_slice().to_vec();
    w.weight.matvec_add(&input, &mut gates);

    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    for k in 0..hd {
        let i = sigmoid(gates[k]);
        let f = sigmoid(gates[hd + k]);
        let g = gates[2 * hd + k].tanh();
        let o = sigmoid(gates[3 * hd + k]);
        gates[k] = i;
        gates[hd + k] = f;
        gates[2 * hd + k] = g;
        gates[3 * hd + k] = o;
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
    let cache = LstmCache {
        input,
        c_prev: c_prev.to_vec(),
        gates,
        tanh_c,
    };
    (h, c, cache)
}

/// Given gradients w.r.t. the step's outputs `h'` and `c'`, accumulates
/// weight gradients into `grad` and returns gradients w.r.t. the step
/// input, `h` and `c`.
pub(crate) fn backward(
    w: &LstmWeights,
    grad: &mut LstmWeights,
    cache: &LstmCache,
    dh: &[f64],
    dc: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hd = w.hidden_dim();
    let g = &cache.gates;
    let mut dz = vec![0.0; 4 * hd];
    let mut dc_prev = vec![0.0; hd];
    for k in 0..hd {
        let (i, f, cand, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
        let tc = cache.tanh_c[k];
        let d_o = dh[k] * tc;
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        dc_prev[k] = dct * f;
        dz[k] = dct * cand * i * (1.0 - i);
        dz[hd + k] = dct * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * hd + k] = dct * i * (1.0 - cand * cand);
        dz[3 * hd + k] = d_o * o * (1.0 - o);
    }
    grad.weight.outer_add(&dz, &cache.input);
    for (b, d) in grad.bias.as_mut_slice().iter_mut().zip(&dz) {
        *b += d;
    }
    let mut d_input = vec![0.0; cache.input.len()];
    w.weight.tmatvec_add(&dz, &mut d_input);
    let dh_prev = d_input.split_off(w.input_dim());
    (d_input, dh_prev, dc_prev)
}
