#![allow(dead_code)]

use std::path::PathBuf;

use kw2q_core::nmt::{decode_step, encode, init_decoder_state, sequence_nll, ModelConfig, ModelParams};
use kw2q_core::text::{BOS, EOS};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn tiny_config(layers: usize) -> ModelConfig {
    ModelConfig {
        embed_dim: 8,
        hidden_dim: 12,
        encoder_layers: layers,
        decoder_layers: layers,
        vocab_size: 20,
        max_decode_len: 10,
    }
}

pub struct GroupCheck {
    pub name: String,
    pub relative_error: f64,
    pub analytic_norm: f64,
}

/// Compares the analytic gradient of the summed NLL with central finite
/// differences, one coordinate at a time. Per group the error is
/// `‖a − n‖ / max(‖a‖, ‖n‖)`, 0 when both vanish.
pub fn gradient_check(
    src: &[usize],
    tgt: &[usize],
    params: &ModelParams,
    config: &ModelConfig,
    step: f64,
) -> Vec<GroupCheck> {
    let (_, grads) = kw2q_core::nmt::backward(src, tgt, params, config).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grads
        .groups()
        .into_iter()
        .map(|(n, m)| (n, m.as_slice().to_vec()))
        .collect();
    let mut probe = params.clone();
    let mut out = Vec::new();
    for (g, (name, a)) in analytic.iter().enumerate() {
        let mut numeric = vec![0.0; a.len()];
        for (i, slot) in numeric.iter_mut().enumerate() {
            let orig = probe.groups()[g].1.as_slice()[i];
            probe.groups_mut()[g].1.as_mut_slice()[i] = orig + step;
            let plus = sequence_nll(src, tgt, &probe, config).unwrap().total;
            probe.groups_mut()[g].1.as_mut_slice()[i] = orig - step;
            let minus = sequence_nll(src, tgt, &probe, config).unwrap().total;
            probe.groups_mut()[g].1.as_mut_slice()[i] = orig;
            *slot = (plus - minus) / (2.0 * step);
        }
        let diff: f64 = a.iter().zip(&numeric).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = na.max(nn);
        out.push(GroupCheck {
            name: name.clone(),
            relative_error: if scale == 0.0 { 0.0 } else { diff / scale },
            analytic_norm: na,
        });
    }
    out
}

/// A complete output of the decoder as the beam search defines it: tokens
/// without EOS, their summed log-probability (EOS included when emitted).
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub ended_with_eos: bool,
}

/// Every output sequence of the model: all EOS-terminated sequences with
/// fewer than `max_decode_len` tokens and all unterminated sequences of
/// exactly `max_decode_len` tokens.
pub fn enumerate_outputs(src: &[usize], params: &ModelParams, config: &ModelConfig) -> Vec<Enumerated> {
    let ann = encode(src, params, config).unwrap();
    let mut out = Vec::new();
    let mut stack = vec![(Vec::new(), 0.0, init_decoder_state(&ann, params))];
    while let Some((tokens, lp, state)) = stack.pop() {
        if tokens.len() == config.max_decode_len {
            out.push(Enumerated {
                tokens,
                log_prob: lp,
                ended_with_eos: false,
            });
            continue;
        }
        let prev = tokens.last().copied().unwrap_or(BOS);
        let (log_probs, next, _) = decode_step(prev, &state, &ann, params).unwrap();
        for (tok, l) in log_probs.iter().enumerate() {
            if tok == EOS {
                out.push(Enumerated {
                    tokens: tokens.clone(),
                    log_prob: lp + l,
                    ended_with_eos: true,
                });
            } else {
                let mut t = tokens.clone();
                t.push(tok);
                stack.push((t, lp + l, next.clone()));
            }
        }
    }
    out
}

/// Log-probability of a complete output computed by teacher forcing.
pub fn teacher_forced_log_prob(src: &[usize], e: &Enumerated, params: &ModelParams, config: &ModelConfig) -> f64 {
    let mut tgt = vec![BOS];
    tgt.extend(&e.tokens);
    if e.ended_with_eos {
        tgt.push(EOS);
    }
    if tgt.len() < 2 {
        return 0.0;
    }
    -sequence_nll(src, &tgt, params, config).unwrap().total
}
