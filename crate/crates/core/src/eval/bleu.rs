//! Corpus-level BLEU-4 with one reference per hypothesis, uniform weights
//! and no smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    /// 0–100.
    pub bleu: f64,
    pub per_n_precision: [f64; MAX_ORDER],
    /// `(clipped matches, candidate n-grams)` per order.
    pub per_n_counts: [(usize, usize); MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_length: usize,
    pub ref_length: usize,
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_default() += 1;
        }
    }
    counts
}

fn check_corpus<S>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<()> {
    if hyps.len() != refs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    if hyps.is_empty() {
        return Err(Error::InvalidArgument("BLEU of an empty corpus".into()));
    }
    Ok(())
}

/// Candidate n-gram counts clipped by the reference counts, summed over the
/// corpus. Returns `(clipped matches, total candidate n-grams)`.
pub fn modified_ngram_precision<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>], n: usize) -> Result<(usize, usize)> {
    if n < 1 {
        return Err(Error::InvalidArgument("n-gram order must be at least 1".into()));
    }
    check_corpus(hyps, refs)?;
    let mut matches = 0;
    let mut total = 0;
    for (hyp, reference) in hyps.iter().zip(refs) {
        let ref_counts = ngram_counts(reference, n);
        for (gram, count) in ngram_counts(hyp, n) {
            matches += count.min(ref_counts.get(&gram).copied().unwrap_or(0));
            total += count;
        }
    }
    Ok((matches, total))
}

/// `1` if the candidate corpus is longer than the reference corpus, else
/// `exp(1 − r/c)`. An empty candidate corpus gets 0.
pub fn brevity_penalty(hyp_length: usize, ref_length: usize) -> f64 {
    if hyp_length > ref_length {
        1.0
    } else if hyp_length == 0 {
        0.0
    } else {
        (1.0 - ref_length as f64 / hyp_length as f64).exp()
    }
}

pub fn corpus_bleu<S: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<S>]) -> Result<BleuReport> {
    check_corpus(hyps, refs)?;
    let mut per_n_precision = [0.0; MAX_ORDER];
    let mut per_n_counts = [(0, 0); MAX_ORDER];
    for n in 1..=MAX_ORDER {
        let (m, t) = modified_ngram_precision(hyps, refs, n)?;
        per_n_counts[n - 1] = (m, t);
        per_n_precision[n - 1] = if t == 0 { 0.0 } else { m as f64 / t as f64 };
    }
    let hyp_length = hyps.iter().map(Vec::len).sum();
    let ref_length = refs.iter().map(Vec::len).sum();
    let bp = brevity_penalty(hyp_length, ref_length);
    let bleu = if per_n_precision.iter().all(|&p| p > 0.0) {
        let log_mean = per_n_precision.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        100.0 * bp * log_mean.exp()
    } else {
        0.0
    };
    Ok(BleuReport {
        bleu,
        per_n_precision,
        per_n_counts,
        brevity_penalty: bp,
        hyp_length,
        ref_length,
    })
}
