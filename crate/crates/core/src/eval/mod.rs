//! Automatic (BLEU) and human evaluation.

pub mod bleu;
pub mod human;

pub use bleu::{brevity_penalty, corpus_bleu, modified_ngram_precision, BleuReport, MAX_ORDER};
pub use human::{aggregate_human_judgments, HumanEvalReport, IntentScore, Judgment, SystemLabel, SystemSummary};
