//! Reference systems that need no training.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BaselineKind {
    /// Emits the query unchanged as the hypothesis question.
    Identity,
}

impl BaselineKind {
    pub fn translate(self, query_tokens: &[String]) -> Vec<String> {
        match self {
            BaselineKind::Identity => identity_translate(query_tokens),
        }
    }
}

pub fn identity_translate(query_tokens: &[String]) -> Vec<String> {
    query_tokens.to_vec()
}
