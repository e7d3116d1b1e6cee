//! Mini-batch SGD with per-epoch learning-rate decay.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::model::{accumulate_gradients, sequence_nll, SequenceLoss};
use super::optim::sgd_update;
use super::params::ModelParams;
use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::text::Vocabulary;

/// Source ids without specials, target ids wrapped in BOS ... EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
}

pub fn encode_corpus(corpus: &ParallelCorpus, vocab: &Vocabulary) -> Vec<EncodedPair> {
    corpus
        .pairs
        .iter()
        .filter(|p| !p.query_tokens.is_empty())
        .map(|p| EncodedPair {
            src: vocab.encode(&p.query_tokens, false),
            tgt: vocab.encode(&p.question_tokens, true),
        })
        .collect()
}

/// One line of the JSONL training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss_per_token: f64,
    pub dev_nll_per_token: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: ModelParams,
    /// Parameters after the epoch with the lowest dev NLL (or the last
    /// epoch when there is no dev set).
    pub best_params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochRecord>,
}

/// Batches for one epoch: examples are shuffled, stably sorted by source
/// length so each batch holds similar lengths, cut into `batch_size`
/// chunks, and the chunk order is shuffled. Fully determined by `seed`
/// and `epoch`.
pub fn batch_order(src_lengths: &[usize], batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..src_lengths.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&i| src_lengths[i]);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect();
    batches.shuffle(&mut rng);
    batches
}

/// Summed NLL over a set of pairs.
pub fn corpus_nll(pairs: &[EncodedPair], params: &ModelParams, config: &ModelConfig) -> Result<SequenceLoss> {
    let mut acc = SequenceLoss { total: 0.0, tokens: 0 };
    for p in pairs {
        let l = sequence_nll(&p.src, &p.tgt, params, config)?;
        acc.total += l.total;
        acc.tokens += l.tokens;
    }
    Ok(acc)
}

pub fn train(
    train_corpus: &ParallelCorpus,
    dev_corpus: &ParallelCorpus,
    vocab: &Vocabulary,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    let train_pairs = encode_corpus(train_corpus, vocab);
    let dev_pairs = encode_corpus(dev_corpus, vocab);
    train_pairs_with(&train_pairs, &dev_pairs, model_config, train_config, None, |_, _| Ok(()))
}

/// Full training loop over pre-encoded pairs. `init` overrides the seeded
/// initialization; `on_epoch` runs after each epoch with the epoch's log
/// record and the current parameters (used for per-epoch checkpoints).
pub fn train_pairs_with<F>(
    train_pairs: &[EncodedPair],
    dev_pairs: &[EncodedPair],
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    init: Option<ModelParams>,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochRecord, &ModelParams) -> Result<()>,
{
    model_config.validate()?;
    train_config.validate()?;
    if train_pairs.is_empty() {
        return Err(Error::InvalidArgument("training corpus is empty".into()));
    }
    let mut params = match init {
        Some(p) if p.matches(model_config) => p,
        Some(_) => return Err(Error::Dimension("initial parameters do not match the model config".into())),
        None => ModelParams::init(model_config, train_config.seed),
    };
    let mut grads = params.zeros_like();
    let lengths: Vec<usize> = train_pairs.iter().map(|p| p.src.len()).collect();
    let mut log = Vec::with_capacity(train_config.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;

    for epoch in 0..train_config.epochs {
        let started = Instant::now();
        let lr = train_config.lr_at(epoch);
        let mut epoch_loss = SequenceLoss { total: 0.0, tokens: 0 };

        for (b, batch) in batch_order(&lengths, train_config.batch_size, train_config.seed, epoch)
            .iter()
            .enumerate()
        {
            grads.fill(0.0);
            let mut batch_tokens = 0;
            for &i in batch {
                let pair = &train_pairs[i];
                let l = accumulate_gradients(&pair.src, &pair.tgt, &params, &mut grads)?;
                if !l.total.is_finite() {
                    return Err(Error::NonFinite(format!("loss {} at epoch {epoch}, batch {b}", l.total)));
                }
                batch_tokens += l.tokens;
                epoch_loss.total += l.total;
                epoch_loss.tokens += l.tokens;
            }
            grads.scale(1.0 / batch_tokens as f64);
            sgd_update(&mut params, &grads, lr, train_config.clip_norm)
                .map_err(|e| Error::NonFinite(format!("epoch {epoch}, batch {b}: {e}")))?;
        }

        let dev_nll = if dev_pairs.is_empty() {
            None
        } else {
            Some(corpus_nll(dev_pairs, &params, model_config)?.per_token())
        };
        let record = EpochRecord {
            epoch,
            lr,
            train_loss_per_token: epoch_loss.per_token(),
            dev_nll_per_token: dev_nll,
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        let criterion = dev_nll.unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().map_or(true, |(c, _, _)| criterion <= *c) {
            best = Some((criterion, epoch, params.clone()));
        }
        on_epoch(&record, &params)?;
        log.push(record);
    }

    let (best_params, best_epoch) = match best {
        Some((_, e, p)) => (p, e),
        None => (params.clone(), 0),
    };
    Ok(TrainOutcome {
        params,
        best_params,
        best_epoch,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_order_is_seeded_and_complete() {
        let lengths: Vec<usize> = (0..50).map(|i| 1 + i % 7).collect();
        let a = batch_order(&lengths, 8, 3, 0);
        assert_eq!(a, batch_order(&lengths, 8, 3, 0));
        assert_ne!(a, batch_order(&lengths, 8, 3, 1));
        let mut all: Vec<usize> = a.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        // bucketing: within a batch lengths span at most two adjacent values
        for batch in &a {
            let min = batch.iter().map(|&i| lengths[i]).min().unwrap();
            let max = batch.iter().map(|&i| lengths[i]).max().unwrap();
            assert!(max - min <= 1, "{batch:?}");
        }
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let cfg = ModelConfig::desk(10);
        assert!(train_pairs_with(&[], &[], &cfg, &TrainConfig::desk(), None, |_, _| Ok(())).is_err());
    }
}
