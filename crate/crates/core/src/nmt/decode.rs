//! Greedy and beam-search decoding.

use std::cmp::Ordering;

use super::config::ModelConfig;
use super::linalg::argmax;
use super::model::{decode_step, encode, init_decoder_state, DecoderState};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::text::{BOS, EOS};

/// Argmax decoding from BOS until EOS or `max_decode_len` tokens. EOS is
/// not included in the output.
pub fn greedy_decode(src_ids: &[usize], params: &ModelParams, config: &ModelConfig) -> Result<Vec<usize>> {
    let ann = encode(src_ids, params, config)?;
    let mut state = init_decoder_state(&ann, params);
    let mut prev = BOS;
    let mut out = Vec::new();
    while out.len() < config.max_decode_len {
        let (log_probs, next, _) = decode_step(prev, &state, &ann, params)?;
        let tok = argmax(&log_probs);
        if tok == EOS {
            break;
        }
        out.push(tok);
        state = next;
        prev = tok;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens without EOS.
    pub tokens: Vec<usize>,
    /// Length-normalized score used for ranking.
    pub score: f64,
    /// Sum of token log-probabilities, EOS included when emitted.
    pub log_prob: f64,
    /// False when the hypothesis was cut at `max_decode_len`.
    pub ended_with_eos: bool,
}

struct Live {
    tokens: Vec<usize>,
    log_prob: f64,
    state: DecoderState,
}

fn normalized(log_prob: f64, steps: usize, alpha: f64) -> f64 {
    if alpha == 0.0 {
        log_prob
    } else {
        log_prob / (steps.max(1) as f64).powf(alpha)
    }
}

/// Beam search. At every step the `beam_size` best expansions of the live
/// hypotheses are kept (ties: earlier parent, then smaller token id);
/// expansions ending in EOS are set aside as finished. Search stops once
/// `beam_size` hypotheses have finished, nothing is live, or
/// `max_decode_len` is reached, in which case the live hypotheses are
/// finished as they stand. Finished hypotheses are ranked by
/// `log_prob / steps^alpha`, ties going to the one completed first.
pub fn beam_decode(
    src_ids: &[usize],
    params: &ModelParams,
    config: &ModelConfig,
    beam_size: usize,
    length_norm_alpha: f64,
) -> Result<Vec<Hypothesis>> {
    if beam_size == 0 {
        return Err(Error::InvalidArgument("beam size must be at least 1".into()));
    }
    let ann = encode(src_ids, params, config)?;
    let mut live = vec![Live {
        tokens: Vec::new(),
        log_prob: 0.0,
        state: init_decoder_state(&ann, params),
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..config.max_decode_len {
        if live.is_empty() || finished.len() >= beam_size {
            break;
        }
        let mut expansions = Vec::with_capacity(live.len());
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (parent, hyp) in live.iter().enumerate() {
            let prev = hyp.tokens.last().copied().unwrap_or(BOS);
            let (log_probs, next, _) = decode_step(prev, &hyp.state, &ann, params)?;
            candidates.extend(log_probs.iter().enumerate().map(|(tok, lp)| (hyp.log_prob + lp, parent, tok)));
            expansions.push(next);
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        candidates.truncate(beam_size);

        let mut next_live = Vec::with_capacity(candidates.len());
        for (log_prob, parent, tok) in candidates {
            let tokens = &live[parent].tokens;
            if tok == EOS {
                finished.push(Hypothesis {
                    tokens: tokens.clone(),
                    score: normalized(log_prob, tokens.len() + 1, length_norm_alpha),
                    log_prob,
                    ended_with_eos: true,
                });
            } else {
                let mut t = tokens.clone();
                t.push(tok);
                next_live.push(Live {
                    tokens: t,
                    log_prob,
                    state: expansions[parent].clone(),
                });
            }
        }
        live = next_live;
    }
    if finished.len() < beam_size {
        for hyp in live {
            let steps = hyp.tokens.len();
            finished.push(Hypothesis {
                score: normalized(hyp.log_prob, steps, length_norm_alpha),
                tokens: hyp.tokens,
                log_prob: hyp.log_prob,
                ended_with_eos: false,
            });
        }
    }
    // stable sort keeps completion order among equal scores
    finished.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
    Ok(finished)
}
