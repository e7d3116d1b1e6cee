//! Bidirectional LSTM encoder, additive attention and the attention
//! decoder, with exact gradients by reverse accumulation.
//!
//! Decoder step `i` (1-based) consumes the previous target token
//! `y[i-1]` and the previous state `s[i-1]`:
//!
//! ```text
//! e[j]   = v · tanh(W s[i-1] + U h[j])
//! α      = softmax(e)
//! ctx    = Σ α[j] h[j]
//! s[i]   = LSTM stack([emb(y[i-1]) ‖ ctx], s[i-1])
//! p(y[i]) = softmax(O [s[i] ‖ ctx ‖ emb(y[i-1])] + b)
//! ```
//!
//! The initial state of every decoder layer is `tanh(W_l h[T] + b_l)` over
//! the last annotation; cells start at zero.

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::linalg::{axpy, concat, dot, log_softmax, softmax};
use super::lstm::{self, LstmCache};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::text::BOS;

/// Per-position encoder outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderAnnotations {
    /// `h[t] = forward[t] ‖ backward[t]` from the top encoder layer.
    pub annotations: Vec<Vec<f64>>,
    /// The last annotation `h[T]`, which seeds the decoder state.
    pub summary: Vec<f64>,
    /// `U h[t]`, precomputed for attention.
    keys: Vec<Vec<f64>>,
}

impl EncoderAnnotations {
    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub context: Vec<f64>,
    pub weights: Vec<f64>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub hidden: Vec<Vec<f64>>,
    pub cell: Vec<Vec<f64>>,
    pub step: usize,
}

impl DecoderState {
    pub fn top(&self) -> &[f64] {
        self.hidden.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceLoss {
    /// Negative log-likelihood summed over predicted positions.
    pub total: f64,
    /// Number of predicted positions (target length minus BOS).
    pub tokens: usize,
}

impl SequenceLoss {
    pub fn per_token(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.total / self.tokens as f64
        }
    }
}

struct EncoderLayerCache {
    forward: Vec<LstmCache>,
    backward: Vec<LstmCache>,
}

struct EncoderCache {
    layers: Vec<EncoderLayerCache>,
}

fn check_ids(ids: &[usize], vocab_size: usize) -> Result<()> {
    match ids.iter().find(|&&id| id >= vocab_size) {
        Some(&id) => Err(Error::TokenOutOfRange { id, size: vocab_size }),
        None => Ok(()),
    }
}

fn check_params(params: &ModelParams, config: &ModelConfig) -> Result<()> {
    if params.matches(config) {
        Ok(())
    } else {
        Err(Error::Dimension("parameters do not match the model config".into()))
    }
}

fn encode_cached(src: &[usize], params: &ModelParams) -> Result<(EncoderAnnotations, EncoderCache)> {
    if src.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty source sequence".into()));
    }
    check_ids(src, params.embedding.rows())?;
    let t_len = src.len();
    let mut inputs: Vec<Vec<f64>> = src.iter().map(|&id| params.embedding.row(id).to_vec()).collect();
    let mut layers = Vec::with_capacity(params.encoder.len());

    for layer in &params.encoder {
        let hd = layer.forward.hidden_dim();
        let mut fwd_out = Vec::with_capacity(t_len);
        let mut fwd_cache = Vec::with_capacity(t_len);
        let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
        for x in &inputs {
            let (h2, c2, cache) = lstm::forward(&layer.forward, x, &h, &c);
            fwd_out.push(h2.clone());
            fwd_cache.push(cache);
            h = h2;
            c = c2;
        }

        let mut bwd_out = vec![Vec::new(); t_len];
        let mut bwd_cache: Vec<Option<LstmCache>> = (0..t_len).map(|_| None).collect();
        let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
        for t in (0..t_len).rev() {
            let (h2, c2, cache) = lstm::forward(&layer.backward, &inputs[t], &h, &c);
            bwd_out[t] = h2.clone();
            bwd_cache[t] = Some(cache);
            h = h2;
            c = c2;
        }

        inputs = fwd_out.iter().zip(&bwd_out).map(|(f, b)| concat(&[f, b])).collect();
        layers.push(EncoderLayerCache {
            forward: fwd_cache,
            backward: bwd_cache.into_iter().map(|c| c.expect("every position visited")).collect(),
        });
    }

    let keys = inputs.iter().map(|h| params.attn_annotation.matvec(h)).collect();
    let summary = inputs[t_len - 1].clone();
    Ok((
        EncoderAnnotations {
            annotations: inputs,
            summary,
            keys,
        },
        EncoderCache { layers },
    ))
}

/// Runs the bidirectional encoder stack over `src_ids`.
pub fn encode(src_ids: &[usize], params: &ModelParams, config: &ModelConfig) -> Result<EncoderAnnotations> {
    check_params(params, config)?;
    encode_cached(src_ids, params).map(|(ann, _)| ann)
}

struct AttentionCache {
    s_prev: Vec<f64>,
    weights: Vec<f64>,
    /// `tanh(W s + U h[j])` per position.
    activations: Vec<Vec<f64>>,
}

fn attention_cached(s_prev: &[f64], ann: &EncoderAnnotations, params: &ModelParams) -> (AttentionOutput, AttentionCache) {
    let projected = params.attn_state.matvec(s_prev);
    let v = params.attn_score.as_slice();
    let mut activations = Vec::with_capacity(ann.len());
    let mut scores = Vec::with_capacity(ann.len());
    for key in &ann.keys {
        let act: Vec<f64> = key.iter().zip(&projected).map(|(k, p)| (k + p).tanh()).collect();
        scores.push(dot(v, &act));
        activations.push(act);
    }
    let weights = softmax(&scores);
    let mut context = vec![0.0; ann.summary.len()];
    for (a, h) in weights.iter().zip(&ann.annotations) {
        axpy(*a, h, &mut context);
    }
    let cache = AttentionCache {
        s_prev: s_prev.to_vec(),
        weights: weights.clone(),
        activations,
    };
    (
        AttentionOutput {
            context,
            weights,
            scores,
        },
        cache,
    )
}

/// Additive attention of the previous top-layer decoder state over the
/// annotations.
pub fn attention(s_prev: &[f64], ann: &EncoderAnnotations, params: &ModelParams) -> Result<AttentionOutput> {
    if s_prev.len() != params.attn_state.cols() {
        return Err(Error::Dimension(format!(
            "decoder state has {} units, attention expects {}",
            s_prev.len(),
            params.attn_state.cols()
        )));
    }
    if ann.is_empty() {
        return Err(Error::InvalidArgument("attention over zero annotations".into()));
    }
    if ann.annotations.iter().any(|h| h.len() != params.attn_annotation.cols()) {
        return Err(Error::Dimension("annotation width does not match attention".into()));
    }
    Ok(attention_cached(s_prev, ann, params).0)
}

/// Decoder state before the first step: `tanh(W_l h[T] + b_l)` per layer,
/// zero cells.
pub fn init_decoder_state(ann: &EncoderAnnotations, params: &ModelParams) -> DecoderState {
    let hidden: Vec<Vec<f64>> = params
        .init
        .iter()
        .map(|d| {
            let mut s = d.bias.as_slice().to_vec();
            d.weight.matvec_add(&ann.summary, &mut s);
            s.iter_mut().for_each(|x| *x = x.tanh());
            s
        })
        .collect();
    let cell = hidden.iter().map(|h| vec![0.0; h.len()]).collect();
    DecoderState { hidden, cell, step: 0 }
}

struct StepCache {
    prev_token: usize,
    attention: AttentionCache,
    lstm: Vec<LstmCache>,
    output_input: Vec<f64>,
    probs: Vec<f64>,
}

fn step_forward(
    prev_token: usize,
    state: &DecoderState,
    ann: &EncoderAnnotations,
    params: &ModelParams,
) -> (Vec<f64>, DecoderState, AttentionOutput, StepCache) {
    let (attn, attn_cache) = attention_cached(state.top(), ann, params);
    let emb = params.embedding.row(prev_token);

    let layers = params.decoder.len();
    let mut hidden = Vec::with_capacity(layers);
    let mut cell = Vec::with_capacity(layers);
    let mut caches = Vec::with_capacity(layers);
    let mut input = concat(&[emb, &attn.context]);
    for (l, weights) in params.decoder.iter().enumerate() {
        let (h, c, cache) = lstm::forward(weights, &input, &state.hidden[l], &state.cell[l]);
        input = h.clone();
        hidden.push(h);
        cell.push(c);
        caches.push(cache);
    }

    let output_input = concat(&[&input, &attn.context, emb]);
    let mut logits = params.output_bias.as_slice().to_vec();
    params.output_weight.matvec_add(&output_input, &mut logits);
    let log_probs = log_softmax(&logits);
    let probs = log_probs.iter().map(|lp| lp.exp()).collect();

    let new_state = DecoderState {
        hidden,
        cell,
        step: state.step + 1,
    };
    let cache = StepCache {
        prev_token,
        attention: attn_cache,
        lstm: caches,
        output_input,
        probs,
    };
    (log_probs, new_state, attn, cache)
}

/// One decoder step: log-probabilities of the next token, the new state and
/// the attention used.
pub fn decode_step(
    prev_token: usize,
    state: &DecoderState,
    ann: &EncoderAnnotations,
    params: &ModelParams,
) -> Result<(Vec<f64>, DecoderState, AttentionOutput)> {
    check_ids(&[prev_token], params.embedding.rows())?;
    if state.hidden.len() != params.decoder.len()
        || state.cell.len() != params.decoder.len()
        || state
            .hidden
            .iter()
            .chain(&state.cell)
            .any(|v| v.len() != params.attn_state.cols())
    {
        return Err(Error::Dimension("decoder state does not match the decoder".into()));
    }
    let (log_probs, new_state, attn, _) = step_forward(prev_token, state, ann, params);
    Ok((log_probs, new_state, attn))
}

fn check_target(tgt: &[usize]) -> Result<()> {
    if tgt.len() < 2 {
        return Err(Error::InvalidArgument(
            "target must contain BOS and at least one predicted token".into(),
        ));
    }
    if tgt[0] != BOS {
        return Err(Error::InvalidArgument("target must start with BOS".into()));
    }
    Ok(())
}

/// Teacher-forced negative log-likelihood of `tgt_ids[1..]` given the
/// source. `tgt_ids` starts with BOS and normally ends with EOS.
pub fn sequence_nll(src_ids: &[usize], tgt_ids: &[usize], params: &ModelParams, config: &ModelConfig) -> Result<SequenceLoss> {
    check_params(params, config)?;
    check_target(tgt_ids)?;
    check_ids(tgt_ids, config.vocab_size)?;
    let ann = encode_cached(src_ids, params)?.0;
    let mut state = init_decoder_state(&ann, params);
    let mut total = 0.0;
    for w in tgt_ids.windows(2) {
        let (log_probs, next, _, _) = step_forward(w[0], &state, &ann, params);
        total -= log_probs[w[1]];
        state = next;
    }
    Ok(SequenceLoss {
        total,
        tokens: tgt_ids.len() - 1,
    })
}

/// Gradient of [`sequence_nll`] w.r.t. every parameter.
pub fn backward(
    src_ids: &[usize],
    tgt_ids: &[usize],
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(SequenceLoss, ModelParams)> {
    check_params(params, config)?;
    let mut grads = params.zeros_like();
    let loss = accumulate_gradients(src_ids, tgt_ids, params, &mut grads)?;
    Ok((loss, grads))
}

/// Adds the gradient of [`sequence_nll`] into `grads` and returns the loss.
pub fn accumulate_gradients(
    src_ids: &[usize],
    tgt_ids: &[usize],
    params: &ModelParams,
    grads: &mut ModelParams,
) -> Result<SequenceLoss> {
    check_target(tgt_ids)?;
    check_ids(tgt_ids, params.embedding.rows())?;
    let (ann, enc_cache) = encode_cached(src_ids, params)?;
    let init_state = init_decoder_state(&ann, params);

    let mut state = init_state.clone();
    let mut steps = Vec::with_capacity(tgt_ids.len() - 1);
    let mut total = 0.0;
    for w in tgt_ids.windows(2) {
        let (log_probs, next, _, cache) = step_forward(w[0], &state, &ann, params);
        total -= log_probs[w[1]];
        steps.push(cache);
        state = next;
    }

    let hd = params.attn_state.cols();
    let embed_dim = params.embedding.cols();
    let ann_dim = ann.summary.len();
    let layers = params.decoder.len();
    let t_len = ann.len();

    // gradients flowing into s[i] from step i+1
    let mut dh = vec![vec![0.0; hd]; layers];
    let mut dc = vec![vec![0.0; hd]; layers];
    let mut d_ann = vec![vec![0.0; ann_dim]; t_len];
    let mut d_keys = vec![vec![0.0; params.attn_state.rows()]; t_len];

    for (cache, w) in steps.iter().zip(tgt_ids.windows(2)).rev() {
        let target = w[1];
        let mut d_logits = cache.probs.clone();
        d_logits[target] -= 1.0;
        grads.output_weight.outer_add(&d_logits, &cache.output_input);
        axpy(1.0, &d_logits, grads.output_bias.as_mut_slice());
        let mut d_out = vec![0.0; cache.output_input.len()];
        params.output_weight.tmatvec_add(&d_logits, &mut d_out);

        axpy(1.0, &d_out[..hd], &mut dh[layers - 1]);
        let mut d_context = d_out[hd..hd + ann_dim].to_vec();
        let mut d_emb = d_out[hd + ann_dim..].to_vec();

        let mut from_above: Option<Vec<f64>> = None;
        for l in (0..layers).rev() {
            let mut dh_l = std::mem::take(&mut dh[l]);
            if let Some(d) = from_above.take() {
                axpy(1.0, &d, &mut dh_l);
            }
            let (dx, dh_prev, dc_prev) = lstm::backward(&params.decoder[l], &mut grads.decoder[l], &cache.lstm[l], &dh_l, &dc[l]);
            dh[l] = dh_prev;
            dc[l] = dc_prev;
            if l > 0 {
                from_above = Some(dx);
            } else {
                axpy(1.0, &dx[..embed_dim], &mut d_emb);
                axpy(1.0, &dx[embed_dim..], &mut d_context);
            }
        }
        axpy(1.0, &d_emb, grads.embedding.row_mut(cache.prev_token));

        attention_backward(
            &cache.attention,
            &ann,
            params,
            grads,
            &d_context,
            &mut dh[layers - 1],
            &mut d_ann,
            &mut d_keys,
        );
    }

    for (j, d_key) in d_keys.iter().enumerate() {
        grads.attn_annotation.outer_add(d_key, &ann.annotations[j]);
        params.attn_annotation.tmatvec_add(d_key, &mut d_ann[j]);
    }

    for (l, d_s0) in dh.iter().enumerate() {
        let s0 = &init_state.hidden[l];
        let d_pre: Vec<f64> = d_s0.iter().zip(s0).map(|(d, s)| d * (1.0 - s * s)).collect();
        grads.init[l].weight.outer_add(&d_pre, &ann.summary);
        axpy(1.0, &d_pre, grads.init[l].bias.as_mut_slice());
        params.init[l].weight.tmatvec_add(&d_pre, &mut d_ann[t_len - 1]);
    }

    encoder_backward(&enc_cache, src_ids, params, grads, d_ann);

    Ok(SequenceLoss {
        total,
        tokens: tgt_ids.len() - 1,
    })
}

#[allow(clippy::too_many_arguments)]
fn attention_backward(
    cache: &AttentionCache,
    ann: &EncoderAnnotations,
    params: &ModelParams,
    grads: &mut ModelParams,
    d_context: &[f64],
    d_s_prev: &mut [f64],
    d_ann: &mut [Vec<f64>],
    d_keys: &mut [Vec<f64>],
) {
    let alpha = &cache.weights;
    let d_alpha: Vec<f64> = ann.annotations.iter().map(|h| dot(d_context, h)).collect();
    for (j, a) in alpha.iter().enumerate() {
        axpy(*a, d_context, &mut d_ann[j]);
    }
    let mean = dot(alpha, &d_alpha);
    let v = params.attn_score.as_slice();
    let mut d_projected = vec![0.0; v.len()];
    for j in 0..alpha.len() {
        let d_score = alpha[j] * (d_alpha[j] - mean);
        if d_score == 0.0 {
            continue;
        }
        let act = &cache.activations[j];
        axpy(d_score, act, grads.attn_score.as_mut_slice());
        for k in 0..v.len() {
            let d_pre = d_score * v[k] * (1.0 - act[k] * act[k]);
            d_projected[k] += d_pre;
            d_keys[j][k] += d_pre;
        }
    }
    grads.attn_state.outer_add(&d_projected, &cache.s_prev);
    params.attn_state.tmatvec_add(&d_projected, d_s_prev);
}

fn encoder_backward(cache: &EncoderCache, src: &[usize], params: &ModelParams, grads: &mut ModelParams, d_top: Vec<Vec<f64>>) {
    let t_len = src.len();
    let mut d_out = d_top;
    for (l, layer_cache) in cache.layers.iter().enumerate().rev() {
        let weights = &params.encoder[l];
        let hd = weights.forward.hidden_dim();
        let mut d_in = vec![vec![0.0; weights.forward.input_dim()]; t_len];

        let (mut dh, mut dc) = (vec![0.0; hd], vec![0.0; hd]);
        for t in (0..t_len).rev() {
            axpy(1.0, &d_out[t][..hd], &mut dh);
            let (dx, dh_prev, dc_prev) = lstm::backward(&weights.forward, &mut grads.encoder[l].forward, &layer_cache.forward[t], &dh, &dc);
            axpy(1.0, &dx, &mut d_in[t]);
            dh = dh_prev;
            dc = dc_prev;
        }

        let (mut dh, mut dc) = (vec![0.0; hd], vec![0.0; hd]);
        for t in 0..t_len {
            axpy(1.0, &d_out[t][hd..], &mut dh);
            let (dx, dh_prev, dc_prev) = lstm::backward(&weights.backward, &mut grads.encoder[l].backward, &layer_cache.backward[t], &dh, &dc);
            axpy(1.0, &dx, &mut d_in[t]);
            dh = dh_prev;
            dc = dc_prev;
        }
        d_out = d_in;
    }
    for (t, &id) in src.iter().enumerate() {
        axpy(1.0, &d_out[t], grads.embedding.row_mut(id));
    }
}
