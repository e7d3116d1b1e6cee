use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParallelCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: ParallelCorpus,
    pub dev: ParallelCorpus,
    pub test: ParallelCorpus,
    /// Original corpus indices of each part, ascending.
    pub train_indices: Vec<usize>,
    pub dev_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Draws `test_size` then `dev_size` pairs uniformly without replacement;
/// the remainder is the training set. Each part keeps the corpus order.
pub fn split_corpus(corpus: &ParallelCorpus, test_size: usize, dev_size: usize, seed: u64) -> Result<CorpusSplit> {
    let held_out = test_size
        .checked_add(dev_size)
        .filter(|&h| h < corpus.len())
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "test ({test_size}) + dev ({dev_size}) must be smaller than the corpus ({})",
                corpus.len()
            ))
        })?;

    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut test_indices = order[..test_size].to_vec();
    let mut dev_indices = order[test_size..held_out].to_vec();
    let mut train_indices = order[held_out..].to_vec();
    test_indices.sort_unstable();
    dev_indices.sort_unstable();
    train_indices.sort_unstable();

    let pick = |idx: &[usize]| ParallelCorpus::new(idx.iter().map(|&i| corpus.pairs[i].clone()).collect());
    Ok(CorpusSplit {
        train: pick(&train_indices),
        dev: pick(&dev_indices),
        test: pick(&test_indices),
        train_indices,
        dev_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QueryQuestionPair;
    use proptest::prelude::*;

    fn corpus(n: usize) -> ParallelCorpus {
        ParallelCorpus::new(
            (0..n)
                .map(|i| QueryQuestionPair::new(vec![format!("q{i}")], vec!["what".into(), "?".into()], ""))
                .collect(),
        )
    }

    #[test]
    fn sizes_and_determinism() {
        let c = corpus(1000);
        let a = split_corpus(&c, 100, 100, 7).unwrap();
        assert_eq!((a.train.len(), a.dev.len(), a.test.len()), (800, 100, 100));
        let b = split_corpus(&c, 100, 100, 7).unwrap();
        assert_eq!(a, b);
        let other = split_corpus(&c, 100, 100, 8).unwrap();
        assert_ne!(a.test_indices, other.test_indices);
    }

    #[test]
    fn rejects_oversized_holdout() {
        let c = corpus(10);
        assert!(split_corpus(&c, 5, 5, 1).is_err());
        assert!(split_corpus(&c, usize::MAX, 1, 1).is_err());
        assert!(split_corpus(&c, 5, 4, 1).is_ok());
    }

    proptest! {
        #[test]
        fn parts_partition_the_corpus(n in 3usize..200, t in 0usize..50, d in 0usize..50, seed: u64) {
            prop_assume!(t + d < n);
            let s = split_corpus(&corpus(n), t, d, seed).unwrap();
            let mut all: Vec<usize> = s.train_indices.iter().chain(&s.dev_indices).chain(&s.test_indices).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(s.test.len(), t);
            prop_assert_eq!(s.dev.len(), d);
        }
    }
}
