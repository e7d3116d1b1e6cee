use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ParallelCorpus;
use crate::error::{Error, Result};

/// Length and question-type profile of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pair_count: usize,
    /// Observed query length → fraction of queries with at most that many
    /// tokens.
    pub query_length_cdf: BTreeMap<usize, f64>,
    /// Question first token → fraction of questions starting with it.
    pub question_type_distribution: BTreeMap<String, f64>,
    pub mean_query_length: f64,
    pub mean_question_length: f64,
}

pub fn compute_stats(corpus: &ParallelCorpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument(
            "corpus statistics are undefined for an empty corpus".into(),
        ));
    }
    let n = corpus.len();
    let mut length_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut type_counts: BTreeMap<String, usize> = BTreeMap::new();
    let (mut query_total, mut question_total) = (0usize, 0usize);
    for pair in &corpus.pairs {
        *length_counts.entry(pair.query_tokens.len()).or_default() += 1;
        if let Some(first) = pair.question_tokens.first() {
            *type_counts.entry(first.clone()).or_default() += 1;
        }
        query_total += pair.query_tokens.len();
        question_total += pair.question_tokens.len();
    }

    let mut cumulative = 0usize;
    let query_length_cdf = length_counts
        .into_iter()
        .map(|(len, count)| {
            cumulative += count;
            let frac = if cumulative == n { 1.0 } else { cumulative as f64 / n as f64 };
            (len, frac)
        })
        .collect();
    let typed: usize = type_counts.values().sum();
    let question_type_distribution = type_counts
        .into_iter()
        .map(|(word, count)| (word, count as f64 / typed as f64))
        .collect();

    Ok(CorpusStats {
        pair_count: n,
        query_length_cdf,
        question_type_distribution,
        mean_query_length: query_total as f64 / n as f64,
        mean_question_length: question_total as f64 / n as f64,
    })
}
