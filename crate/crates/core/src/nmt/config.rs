use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model dimensions. The attention layer uses `hidden_dim` as its inner
/// size and every decoder layer has `hidden_dim` units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    /// Units per encoder direction and per decoder layer.
    pub hidden_dim: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub vocab_size: usize,
    pub max_decode_len: usize,
}

impl ModelConfig {
    /// 2-layer 512-unit LSTMs with 300-dimensional embeddings.
    pub fn paper(vocab_size: usize) -> Self {
        ModelConfig {
            embed_dim: 300,
            hidden_dim: 512,
            encoder_layers: 2,
            decoder_layers: 2,
            vocab_size,
            max_decode_len: 30,
        }
    }

    /// Single-layer model small enough to train on a laptop CPU.
    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig {
            embed_dim: 32,
            hidden_dim: 64,
            encoder_layers: 1,
            decoder_layers: 1,
            vocab_size,
            max_decode_len: 30,
        }
    }

    pub fn attention_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Width of one encoder annotation (forward ‖ backward).
    pub fn annotation_dim(&self) -> usize {
        2 * self.hidden_dim
    }

    /// Width of the vector fed to the output projection:
    /// decoder state ‖ context ‖ previous-token embedding.
    pub fn output_input_dim(&self) -> usize {
        self.hidden_dim + self.annotation_dim() + self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("encoder_layers", self.encoder_layers),
            ("decoder_layers", self.decoder_layers),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.vocab_size < 5 {
            return Err(Error::InvalidArgument(format!(
                "vocab_size must be at least 5, got {}",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub initial_lr: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Global gradient-norm clipping threshold.
    pub clip_norm: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn paper() -> Self {
        TrainConfig {
            initial_lr: 0.5,
            lr_decay: 0.99,
            batch_size: 128,
            epochs: 6,
            clip_norm: 5.0,
            seed: 0,
        }
    }

    /// Small batches and a higher rate for small synthetic corpora.
    pub fn desk() -> Self {
        TrainConfig {
            initial_lr: 1.0,
            lr_decay: 0.99,
            batch_size: 4,
            epochs: 10,
            clip_norm: 5.0,
            seed: 0,
        }
    }

    /// Learning rate used throughout epoch `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.initial_lr * self.lr_decay.powi(epoch as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.initial_lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::InvalidArgument(format!("lr decay must be in (0, 1], got {}", self.lr_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::InvalidArgument(format!("clip norm must be > 0, got {}", self.clip_norm)));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::paper()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_schedule() {
        let c = TrainConfig::paper();
        assert_eq!(c.lr_at(0), 0.5);
        assert!((c.lr_at(1) - 0.495).abs() < 1e-15);
        assert!((c.lr_at(2) - 0.49005).abs() < 1e-15);
    }

    #[test]
    fn paper_defaults() {
        let m = ModelConfig::paper(150_000);
        assert_eq!((m.embed_dim, m.hidden_dim, m.encoder_layers, m.decoder_layers), (300, 512, 2, 2));
        assert_eq!(m.annotation_dim(), 1024);
        let t = TrainConfig::paper();
        assert_eq!((t.batch_size, t.epochs), (128, 6));
        assert!(m.validate().is_ok() && t.validate().is_ok());
    }

    #[test]
    fn validation_rejects_degenerate_configs() {
        let mut m = ModelConfig::desk(4);
        assert!(m.validate().is_err());
        m.vocab_size = 5;
        m.hidden_dim = 0;
        assert!(m.validate().is_err());
        let mut t = TrainConfig::desk();
        t.lr_decay = 1.5;
        assert!(t.validate().is_err());
        t.lr_decay = 1.0;
        t.initial_lr = 0.0;
        assert!(t.validate().is_err());
    }
}
