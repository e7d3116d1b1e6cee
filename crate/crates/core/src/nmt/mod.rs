//! Attention-based encoder/decoder translation model, trained from scratch
//! with hand-derived gradients.

pub mod checkpoint;
pub mod config;
pub mod decode;
pub mod linalg;
mod lstm;
pub mod model;
pub mod optim;
pub mod params;
pub mod train;

pub use checkpoint::{checkpoint_bytes, load_checkpoint, parse_checkpoint, read_checkpoint, save_checkpoint, Checkpoint};
pub use config::{ModelConfig, TrainConfig};
pub use decode::{beam_decode, greedy_decode, Hypothesis};
pub use lstm::lstm_step;
pub use model::{
    attention, backward, decode_step, encode, init_decoder_state, sequence_nll, AttentionOutput, DecoderState,
    EncoderAnnotations, SequenceLoss,
};
pub use optim::sgd_update;
pub use params::{BiLstmLayer, Dense, LstmWeights, ModelParams};
pub use train::{batch_order, corpus_nll, encode_corpus, train, train_pairs_with, EncodedPair, EpochRecord, TrainOutcome};
