//! Run configuration: profile defaults, then the config file, then flags.
//!
//! The config file is TOML. Every key is optional:
//!
//! ```toml
//! seed = 7
//! profile = "desk"          # or "paper"
//!
//! [model]
//! embed_dim = 32
//! hidden_dim = 64
//! encoder_layers = 1
//! decoder_layers = 1
//! max_decode_len = 30
//! max_vocab = 150000
//!
//! [train]
//! lr = 1.0
//! lr_decay = 0.99
//! batch_size = 4
//! epochs = 10
//! clip_norm = 5.0
//!
//! [filter]
//! max_query_tokens = 9
//! cqa_domains = ["quora.com", "answers.yahoo.com", "answers.wikia.com"]
//! question_words = ["what", "how"]
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use kw2q_core::corpus::MiningConfig;
use kw2q_core::nmt::{ModelConfig, TrainConfig};
use kw2q_core::text::DEFAULT_MAX_VOCAB;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub filter: FilterSection,
}

#[derive(Debug, Default, Clone, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub encoder_layers: Option<usize>,
    #[arg(long)]
    pub decoder_layers: Option<usize>,
    #[arg(long)]
    pub max_decode_len: Option<usize>,
    #[arg(long)]
    pub max_vocab: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub lr_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    #[arg(long)]
    pub max_query_tokens: Option<usize>,
    /// Repeat to give several domains.
    #[arg(long = "cqa-domain")]
    #[serde(default)]
    pub cqa_domains: Vec<String>,
    #[arg(skip)]
    #[serde(default)]
    pub question_words: Vec<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Settings after merging, flags winning over the file.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub profile: Profile,
    file: FileConfig,
}

impl Resolved {
    pub fn new(file: FileConfig, seed: Option<u64>, profile: Option<Profile>) -> Self {
        Resolved {
            seed: pick(seed, file.seed, 0),
            profile: pick(profile, file.profile, Profile::Desk),
            file,
        }
    }

    pub fn max_vocab(&self, flags: &ModelSection) -> usize {
        pick(flags.max_vocab, self.file.model.max_vocab, DEFAULT_MAX_VOCAB)
    }

    pub fn model(&self, vocab_size: usize, flags: &ModelSection) -> Result<ModelConfig> {
        let base = match self.profile {
            Profile::Desk => ModelConfig::desk(vocab_size),
            Profile::Paper => ModelConfig::paper(vocab_size),
        };
        let f = &self.file.model;
        let cfg = ModelConfig {
            embed_dim: pick(flags.embed_dim, f.embed_dim, base.embed_dim),
            hidden_dim: pick(flags.hidden_dim, f.hidden_dim, base.hidden_dim),
            encoder_layers: pick(flags.encoder_layers, f.encoder_layers, base.encoder_layers),
            decoder_layers: pick(flags.decoder_layers, f.decoder_layers, base.decoder_layers),
            vocab_size,
            max_decode_len: pick(flags.max_decode_len, f.max_decode_len, base.max_decode_len),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn train(&self, flags: &TrainSection) -> Result<TrainConfig> {
        let base = match self.profile {
            Profile::Desk => TrainConfig::desk(),
            Profile::Paper => TrainConfig::paper(),
        };
        let f = &self.file.train;
        let cfg = TrainConfig {
            initial_lr: pick(flags.lr, f.lr, base.initial_lr),
            lr_decay: pick(flags.lr_decay, f.lr_decay, base.lr_decay),
            batch_size: pick(flags.batch_size, f.batch_size, base.batch_size),
            epochs: pick(flags.epochs, f.epochs, base.epochs),
            clip_norm: pick(flags.clip_norm, f.clip_norm, base.clip_norm),
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mining(&self, flags: &FilterSection) -> Result<MiningConfig> {
        let mut cfg = MiningConfig::default();
        let f = &self.file.filter;
        cfg.filter.max_query_tokens = pick(flags.max_query_tokens, f.max_query_tokens, cfg.filter.max_query_tokens);
        if cfg.filter.max_query_tokens == 0 {
            bail!("max_query_tokens must be at least 1");
        }
        let domains = if flags.cqa_domains.is_empty() { &f.cqa_domains } else { &flags.cqa_domains };
        if !domains.is_empty() {
            cfg.cqa_domains = domains.clone();
        }
        if !f.question_words.is_empty() {
            cfg.filter.question_words = f.question_words.iter().map(|w| w.to_lowercase()).collect();
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_profile() {
        let file: FileConfig = toml::from_str("seed = 3\nprofile = \"paper\"\n[model]\nhidden_dim = 10\n[train]\nepochs = 2\nlr = 0.1\n").unwrap();
        let r = Resolved::new(file, None, None);
        assert_eq!((r.seed, r.profile), (3, Profile::Paper));
        let flags = ModelSection {
            hidden_dim: Some(20),
            ..Default::default()
        };
        let m = r.model(100, &flags).unwrap();
        assert_eq!((m.embed_dim, m.hidden_dim, m.encoder_layers), (300, 20, 2));
        assert_eq!(r.model(100, &ModelSection::default()).unwrap().hidden_dim, 10);
        let t = r.train(&TrainSection::default()).unwrap();
        assert_eq!((t.epochs, t.initial_lr, t.batch_size, t.seed), (2, 0.1, 128, 3));

        let r = Resolved::new(FileConfig::default(), Some(9), Some(Profile::Desk));
        assert_eq!(r.seed, 9);
        assert_eq!(r.model(50, &ModelSection::default()).unwrap(), ModelConfig::desk(50));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 3").is_err());
        assert!(toml::from_str::<FileConfig>("[model]\nhiden_dim = 3").is_err());
    }

    #[test]
    fn filter_settings() {
        let file: FileConfig =
            toml::from_str("[filter]\nmax_query_tokens = 4\ncqa_domains = [\"example.org\"]\nquestion_words = [\"What\"]").unwrap();
        let m = Resolved::new(file, None, None).mining(&FilterSection::default()).unwrap();
        assert_eq!(m.filter.max_query_tokens, 4);
        assert_eq!(m.cqa_domains, vec!["example.org".to_string()]);
        assert_eq!(m.filter.question_words, vec!["what".to_string()]);
    }
}
