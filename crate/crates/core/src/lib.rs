//! Keyword query → natural-language question generation.
//!
//! * [`corpus`] mines ⟨query, question⟩ pairs from search-log clicks on
//!   community QA sites, profiles and splits them, and can synthesize a
//!   templated stand-in corpus.
//! * [`text`] tokenizes and builds the shared vocabulary.
//! * [`nmt`] is a bidirectional-LSTM encoder with an additive-attention
//!   LSTM decoder, trained by SGD with hand-written backpropagation.
//! * [`baselines`] holds the identity (copy-the-query) system.
//! * [`eval`] computes corpus BLEU and aggregates human judgments.
//! * [`annotation`] is the task pool and judgment log behind the human
//!   evaluation service.

pub mod annotation;
pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod nmt;
pub mod text;

pub use error::{Error, Result};
