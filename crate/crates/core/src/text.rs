//! Tokenization and the shared source/target vocabulary.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

const SPECIALS: [&str; 4] = [PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN];

pub const DEFAULT_MAX_VOCAB: usize = 150_000;

/// Characters that always become tokens of their own.
const SPLIT_CHARS: [char; 8] = ['?', '!', '.', ',', '\'', '"', '(', ')'];

fn is_split_char(c: char) -> bool {
    SPLIT_CHARS.contains(&c)
}

/// Lowercases `text`, splits on Unicode whitespace and detaches the
/// punctuation characters `? ! . , ' " ( )` into separate tokens. Other
/// symbols (`#`, `-`, `+`) stay inside their token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for c in word.chars() {
            if is_split_char(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.extend(c.to_lowercase());
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

/// Token to id mapping with the four special tokens pinned at ids 0..=3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
    max_size: usize,
}

impl Vocabulary {
    fn with_specials(max_size: usize) -> Self {
        let mut v = Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
            max_size,
        };
        for s in SPECIALS {
            v.push(s.to_string());
        }
        v
    }

    fn push(&mut self, token: String) {
        self.token_to_id.insert(token.clone(), self.id_to_token.len());
        self.id_to_token.push(token);
    }

    /// Builds a vocabulary from an id-ordered token list whose first four
    /// entries are the special tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() {
            return Err(Error::Vocabulary(format!(
                "expected at least {} entries, found {}",
                SPECIALS.len(),
                tokens.len()
            )));
        }
        for (id, special) in SPECIALS.iter().enumerate() {
            if tokens[id] != *special {
                return Err(Error::Vocabulary(format!(
                    "id {id} must be {special:?}, found {:?}",
                    tokens[id]
                )));
            }
        }
        let mut v = Vocabulary {
            token_to_id: HashMap::with_capacity(tokens.len()),
            id_to_token: Vec::with_capacity(tokens.len()),
            max_size: tokens.len().max(DEFAULT_MAX_VOCAB),
        };
        for (id, tok) in tokens.into_iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Vocabulary(format!("invalid token at id {id}: {tok:?}")));
            }
            if v.token_to_id.contains_key(&tok) {
                return Err(Error::Vocabulary(format!("duplicate token {tok:?} at id {id}")));
            }
            v.push(tok);
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Maps tokens to ids, unknown tokens to [`UNK`], optionally wrapping
    /// the result in BOS ... EOS.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S], add_bos_eos: bool) -> Vec<usize> {
        let mut ids = Vec::with_capacity(tokens.len() + 2);
        if add_bos_eos {
            ids.push(BOS);
        }
        ids.extend(tokens.iter().map(|t| self.id(t.as_ref()).unwrap_or(UNK)));
        if add_bos_eos {
            ids.push(EOS);
        }
        ids
    }

    /// Inverse of [`encode`](Self::encode): PAD, BOS and EOS are dropped,
    /// UNK is rendered as `<unk>`.
    pub fn decode_ids(&self, ids: &[usize]) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(ids.len());
        for &id in ids {
            let tok = self.token(id).ok_or(Error::TokenOutOfRange {
                id,
                size: self.len(),
            })?;
            if matches!(id, PAD | BOS | EOS) {
                continue;
            }
            out.push(tok.to_string());
        }
        Ok(out)
    }

    /// One token per line, line number = id.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for t in &self.id_to_token {
            let _ = writeln!(s, "{t}");
        }
        s
    }

    pub fn parse(content: &str) -> Result<Self> {
        Self::from_tokens(content.lines().map(str::to_string).collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    /// SHA-256 of the file representation, hex encoded. Checkpoints store
    /// it to detect a mismatched vocabulary at load time.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_file_string().as_bytes()))
    }
}

/// Builds one vocabulary shared by queries and questions. Tokens are ranked
/// by descending frequency, ties broken lexicographically, and the list is
/// truncated so that the total size including specials is at most
/// `max_size`.
pub fn build_vocab(corpus: &ParallelCorpus, max_size: usize) -> Result<Vocabulary> {
    build_vocab_from_sequences(
        corpus
            .pairs
            .iter()
            .flat_map(|p| [p.query_tokens.as_slice(), p.question_tokens.as_slice()]),
        max_size,
    )
}

pub fn build_vocab_from_sequences<'a, I>(sequences: I, max_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a [String]>,
{
    if max_size < SPECIALS.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "max vocabulary size must be at least {}, got {max_size}",
            SPECIALS.len() + 1
        )));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for tok in seq {
            if !SPECIALS.contains(&tok.as_str()) {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary::with_specials(max_size);
    for (tok, _) in ranked.into_iter().take(max_size - SPECIALS.len()) {
        vocab.push(tok.to_string());
    }
    Ok(vocab)
}
