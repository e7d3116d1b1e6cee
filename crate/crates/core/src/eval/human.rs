//! Human judgments: grammaticality (yes/no) and query/question intent
//! similarity on a 1–5 scale.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SystemLabel {
    Smt,
    Nmt,
    Identity,
    Other,
}

impl SystemLabel {
    pub const ALL: [SystemLabel; 4] = [SystemLabel::Smt, SystemLabel::Nmt, SystemLabel::Identity, SystemLabel::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemLabel::Smt => "SMT",
            SystemLabel::Nmt => "NMT",
            SystemLabel::Identity => "IDENTITY",
            SystemLabel::Other => "OTHER",
        }
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemLabel {
    type Err = std::convert::Infallible;

    /// Case-insensitive; unknown labels map to `OTHER`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "SMT" => SystemLabel::Smt,
            "NMT" => SystemLabel::Nmt,
            "IDENTITY" => SystemLabel::Identity,
            _ => SystemLabel::Other,
        })
    }
}

/// Intent-similarity rating, 1 (unrelated) to 5 (highly similar).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct IntentScore(u8);

impl IntentScore {
    pub fn new(score: i64) -> Option<Self> {
        (1..=5).contains(&score).then_some(IntentScore(score as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl TryFrom<i64> for IntentScore {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, Self::Error> {
        IntentScore::new(v).ok_or_else(|| format!("intent score must be in 1..=5, got {v}"))
    }
}

impl From<IntentScore> for u8 {
    fn from(s: IntentScore) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub pair_id: String,
    pub judge_id: String,
    pub grammatical: bool,
    pub intent_score: IntentScore,
    pub system_label: SystemLabel,
    /// RFC 3339.
    pub timestamp: String,
}

impl Judgment {
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Judgment>> {
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Stream { records: i, source })?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub judgments: usize,
    pub grammatical_yes: usize,
    pub grammatical_fraction: f64,
    /// Score → count, keys 1 through 5 always present.
    pub intent_histogram: BTreeMap<u8, usize>,
    /// Fraction of judgments scoring 4 or 5.
    pub high_intent_fraction: f64,
}

impl Default for SystemSummary {
    fn default() -> Self {
        SystemSummary {
            judgments: 0,
            grammatical_yes: 0,
            grammatical_fraction: 0.0,
            intent_histogram: (1..=5).map(|s| (s, 0)).collect(),
            high_intent_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanEvalReport {
    pub total_judgments: usize,
    pub systems: BTreeMap<SystemLabel, SystemSummary>,
}

impl HumanEvalReport {
    pub fn system(&self, label: SystemLabel) -> &SystemSummary {
        &self.systems[&label]
    }
}

/// Per-system counts. Every judgment counts, including several judgments
/// of the same pair.
pub fn aggregate_human_judgments(judgments: &[Judgment]) -> HumanEvalReport {
    let mut systems: BTreeMap<SystemLabel, SystemSummary> =
        SystemLabel::ALL.iter().map(|&l| (l, SystemSummary::default())).collect();
    for j in judgments {
        let s = systems.entry(j.system_label).or_default();
        s.judgments += 1;
        s.grammatical_yes += usize::from(j.grammatical);
        *s.intent_histogram.entry(j.intent_score.get()).or_default() += 1;
    }
    for s in systems.values_mut() {
        if s.judgments > 0 {
            let n = s.judgments as f64;
            s.grammatical_fraction = s.grammatical_yes as f64 / n;
            let high = s.intent_histogram[&4] + s.intent_histogram[&5];
            s.high_intent_fraction = high as f64 / n;
        }
    }
    HumanEvalReport {
        total_judgments: judgments.len(),
        systems,
    }
}
