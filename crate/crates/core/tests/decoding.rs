mod common;

use common::{enumerate_outputs, teacher_forced_log_prob};
use kw2q_core::nmt::{beam_decode, greedy_decode, sequence_nll, ModelConfig, ModelParams};
use kw2q_core::text::{BOS, EOS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(vocab_size: usize, max_len: usize) -> ModelConfig {
    ModelConfig {
        embed_dim: 4,
        hidden_dim: 6,
        encoder_layers: 1,
        decoder_layers: 1,
        vocab_size,
        max_decode_len: max_len,
    }
}

/// Scales the output layer so the toy models have peaked distributions.
fn sharpened(cfg: &ModelConfig, seed: u64, factor: f64) -> ModelParams {
    let mut p = ModelParams::init(cfg, seed);
    p.output_weight.scale(factor);
    p.output_bias.scale(factor);
    p
}

#[test]
fn full_width_beam_equals_exhaustive_enumeration() {
    for (vocab, seed) in [(5, 1), (5, 2), (7, 3)] {
        let cfg = toy(vocab, 4);
        let params = sharpened(&cfg, seed, 20.0);
        let src = [4, vocab - 1, 4];
        let mut all = enumerate_outputs(&src, &params, &cfg);
        all.sort_by(|a, b| b.log_prob.partial_cmp(&a.log_prob).unwrap());
        let beam = beam_decode(&src, &params, &cfg, vocab.pow(4), 0.0).unwrap();
        assert_eq!(beam.len(), all.len());
        for (b, e) in beam.iter().zip(&all) {
            assert_eq!(b.tokens, e.tokens);
            assert_eq!(b.ended_with_eos, e.ended_with_eos);
            assert!((b.log_prob - e.log_prob).abs() < 1e-9);
        }
        let total: f64 = all.iter().map(|e| e.log_prob.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9, "output distribution sums to {total}");
    }
}

#[test]
fn enumerated_scores_agree_with_teacher_forcing() {
    let cfg = toy(5, 3);
    let params = ModelParams::init(&cfg, 11);
    for e in enumerate_outputs(&[4, 4], &params, &cfg) {
        if e.tokens.is_empty() && !e.ended_with_eos {
            continue;
        }
        let tf = teacher_forced_log_prob(&[4, 4], &e, &params, &cfg);
        assert!((tf - e.log_prob).abs() < 1e-10);
    }
}

#[test]
fn beam_top_is_exhaustive_best_when_model_is_peaked() {
    for seed in 0..20 {
        let cfg = toy(5, 4);
        let params = sharpened(&cfg, seed, 20.0);
        let best = enumerate_outputs(&[4], &params, &cfg)
            .into_iter()
            .map(|e| e.log_prob)
            .fold(f64::NEG_INFINITY, f64::max);
        for k in 1..=3 {
            let top = &beam_decode(&[4], &params, &cfg, k, 0.0).unwrap()[0];
            assert!(top.log_prob <= best + 1e-12);
        }
    }
}

fn greedy_log_prob(src: &[usize], params: &ModelParams, cfg: &ModelConfig) -> f64 {
    let g = greedy_decode(src, params, cfg).unwrap();
    let mut tgt = vec![BOS];
    tgt.extend(&g);
    if g.len() < cfg.max_decode_len {
        tgt.push(EOS);
    }
    -sequence_nll(src, &tgt, params, cfg).unwrap().total
}

#[test]
fn beam_of_one_is_greedy_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..100 {
        let cfg = toy(rng.gen_range(5..12), rng.gen_range(1..8));
        let params = sharpened(&cfg, seed, rng.gen_range(1.0..30.0));
        let src: Vec<usize> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(4..cfg.vocab_size)).collect();
        let greedy = greedy_decode(&src, &params, &cfg).unwrap();
        let beam = beam_decode(&src, &params, &cfg, 1, 0.0).unwrap();
        assert_eq!(beam[0].tokens, greedy, "model {seed}");
        assert!((beam[0].log_prob - greedy_log_prob(&src, &params, &cfg)).abs() < 1e-9);
    }
}

#[test]
fn wider_beams_score_at_least_greedy() {
    let mut violations = 0;
    for seed in 0..200 {
        let cfg = toy(8, 6);
        let params = sharpened(&cfg, seed, 10.0);
        let src = [4, 5 + (seed as usize % 3)];
        let g = greedy_log_prob(&src, &params, &cfg);
        let top = &beam_decode(&src, &params, &cfg, 4, 0.0).unwrap()[0];
        if top.log_prob < g - 1e-12 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn ranking_respects_length_normalization() {
    let cfg = toy(6, 5);
    let params = sharpened(&cfg, 3, 5.0);
    for alpha in [0.0, 0.6, 1.0] {
        let beams = beam_decode(&[4, 5], &params, &cfg, 4, alpha).unwrap();
        for w in beams.windows(2) {
            assert!(w[0].score >= w[1].score);
        }
        for b in &beams {
            let steps = (b.tokens.len() + usize::from(b.ended_with_eos)).max(1) as f64;
            assert!((b.score - b.log_prob / steps.powf(alpha)).abs() < 1e-12);
        }
    }
}
