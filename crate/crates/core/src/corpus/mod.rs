//! Mining a ⟨query, question⟩ parallel corpus from search-log click records.
//!
//! A record contributes a pair when its click landed on a whitelisted
//! community-QA site, a question can be recovered for the clicked page, and
//! the tokenized pair passes [`filter_pair`]. Exact duplicate pairs are
//! dropped, keeping the first occurrence in input order.

mod split;
mod stats;
pub mod synthetic;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{join_tokens, tokenize};

pub use split::{split_corpus, CorpusSplit};
pub use stats::{compute_stats, CorpusStats};
pub use synthetic::{default_entities, default_templates, generate_synthetic_corpus, EntityTable, Template, TemplateSet};

pub const DEFAULT_CQA_DOMAINS: [&str; 3] = ["answers.wikia.com", "quora.com", "answers.yahoo.com"];

pub const DEFAULT_QUESTION_WORDS: [&str; 22] = [
    "what", "where", "who", "whom", "whose", "when", "why", "which", "how", "is", "are", "was",
    "were", "can", "could", "did", "do", "does", "will", "would", "should", "list",
];

/// Site-name suffixes stripped from page titles, compared case-insensitively.
const TITLE_SUFFIXES: [&str; 3] = [" - quora", " - yahoo answers", " - wikianswers"];

/// One search-log event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchLogRecord {
    pub query: String,
    pub shown_urls: Vec<String>,
    pub clicked_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicked_question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clicked_title: Option<String>,
}

/// Parses one JSONL log line. `line_no` is 1-based and only used for the
/// error.
pub fn parse_log_line(line: &str, line_no: usize) -> Result<SearchLogRecord> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let mut record: SearchLogRecord =
        serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;

    if record.query.trim().is_empty() {
        return Err(parse_err("empty query".into()));
    }
    let blank_to_none = |v: &mut Option<String>| {
        if v.as_deref().is_some_and(|s| s.trim().is_empty()) {
            *v = None;
        }
    };
    blank_to_none(&mut record.clicked_url);
    blank_to_none(&mut record.clicked_question);
    blank_to_none(&mut record.clicked_title);

    if let Some(url) = &record.clicked_url {
        if !record.shown_urls.iter().any(|u| u == url) {
            return Err(parse_err(format!("clicked_url {url:?} not among shown_urls")));
        }
    }
    Ok(record)
}

/// True iff the URL's host equals a whitelist entry or is a subdomain of
/// one. Unparseable URLs are never CQA.
pub fn is_cqa_domain<S: AsRef<str>>(url: &str, whitelist: &[S]) -> bool {
    matching_domain(url, whitelist).is_some()
}

fn matching_domain<'a, S: AsRef<str>>(url: &str, whitelist: &'a [S]) -> Option<&'a str> {
    let parsed = url::Url::parse(url).ok()?;
    let host = parsed.host_str()?.trim_end_matches('.').to_ascii_lowercase();
    whitelist.iter().map(AsRef::as_ref).find(|domain| {
        let domain = domain.trim_end_matches('.');
        host.len() >= domain.len()
            && host[host.len() - domain.len()..].eq_ignore_ascii_case(domain)
            && (host.len() == domain.len() || host.as_bytes()[host.len() - domain.len() - 1] == b'.')
    })
}

/// Recovers the question asked on the clicked page: the explicit
/// `clicked_question` if present, else the page title with its site-name
/// suffix removed.
pub fn extract_question(record: &SearchLogRecord) -> Option<String> {
    if let Some(q) = &record.clicked_question {
        return Some(q.trim().to_string());
    }
    let title = record.clicked_title.as_deref()?.trim();
    let lower = title.to_lowercase();
    let stripped = TITLE_SUFFIXES
        .iter()
        .find(|suffix| lower.ends_with(*suffix))
        // lowercasing may change byte lengths for non-ASCII titles
        .and_then(|suffix| title.get(..title.len() - suffix.len()))
        .unwrap_or(title)
        .trim();
    (!stripped.is_empty()).then(|| stripped.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterReason {
    Accept,
    NotCqaDomain,
    QueryTooLong,
    NotAQuestion,
    EmptyField,
}

impl FilterReason {
    pub const REJECTIONS: [FilterReason; 4] = [
        FilterReason::NotCqaDomain,
        FilterReason::QueryTooLong,
        FilterReason::NotAQuestion,
        FilterReason::EmptyField,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub accepted: bool,
    pub reason: FilterReason,
}

impl FilterDecision {
    fn of(reason: FilterReason) -> Self {
        FilterDecision {
            accepted: reason == FilterReason::Accept,
            reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Queries must have strictly fewer than `max_query_tokens + 1` tokens.
    pub max_query_tokens: usize,
    pub question_words: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            max_query_tokens: 9,
            question_words: DEFAULT_QUESTION_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

pub fn filter_pair(query: &str, question: &str, config: &FilterConfig) -> FilterDecision {
    filter_tokens(&tokenize(query), &tokenize(question), config)
}

/// Applies the filters in the fixed order empty field, query length,
/// question-word prefix. The first failing check decides the reason.
pub fn filter_tokens(query: &[String], question: &[String], config: &FilterConfig) -> FilterDecision {
    if query.is_empty() || question.is_empty() {
        return FilterDecision::of(FilterReason::EmptyField);
    }
    if query.len() > config.max_query_tokens {
        return FilterDecision::of(FilterReason::QueryTooLong);
    }
    if !config.question_words.iter().any(|w| *w == question[0]) {
        return FilterDecision::of(FilterReason::NotAQuestion);
    }
    FilterDecision::of(FilterReason::Accept)
}

/// Appends a trailing `?` token when missing.
pub fn normalize_question(mut tokens: Vec<String>) -> Vec<String> {
    if tokens.last().map(String::as_str) != Some("?") {
        tokens.push("?".to_string());
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryQuestionPair {
    pub query_tokens: Vec<String>,
    pub question_tokens: Vec<String>,
    pub source_domain: String,
}

impl QueryQuestionPair {
    pub fn new(query_tokens: Vec<String>, question_tokens: Vec<String>, source_domain: impl Into<String>) -> Self {
        QueryQuestionPair {
            query_tokens,
            question_tokens,
            source_domain: source_domain.into(),
        }
    }

    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{}", join_tokens(&self.query_tokens), join_tokens(&self.question_tokens))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<QueryQuestionPair>,
}

impl ParallelCorpus {
    pub fn new(pairs: Vec<QueryQuestionPair>) -> Self {
        ParallelCorpus { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.pairs {
            writeln!(out, "{}", p.to_tsv_line())?;
        }
        out.flush()
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_tsv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads `query<TAB>question` lines. Text is re-tokenized so hand-written
    /// files are accepted too; the source domain is unknown and left empty.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Stream { records: i, source })?;
            if line.trim().is_empty() {
                continue;
            }
            let (query, question) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected query<TAB>question".into(),
            })?;
            pairs.push(QueryQuestionPair::new(tokenize(query), tokenize(question), ""));
        }
        Ok(ParallelCorpus { pairs })
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub cqa_domains: Vec<String>,
    pub filter: FilterConfig,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            cqa_domains: DEFAULT_CQA_DOMAINS.iter().map(|d| d.to_string()).collect(),
            filter: FilterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningReport {
    pub records_read: usize,
    pub malformed_skipped: usize,
    pub pairs_emitted: usize,
    pub duplicates_dropped: usize,
    pub rejections: BTreeMap<FilterReason, usize>,
    /// `(line number, message)` for every malformed line.
    pub parse_errors: Vec<(usize, String)>,
}

impl MiningReport {
    pub fn rejected(&self, reason: FilterReason) -> usize {
        self.rejections.get(&reason).copied().unwrap_or(0)
    }

    pub fn total_rejected(&self) -> usize {
        self.rejections.values().sum()
    }
}

#[derive(Debug, Clone)]
pub struct MiningOutput {
    pub corpus: ParallelCorpus,
    /// `None` when no pair survived.
    pub stats: Option<CorpusStats>,
    pub report: MiningReport,
}

/// Classifies one well-formed record, returning the normalized pair on
/// acceptance.
pub fn mine_record(
    record: &SearchLogRecord,
    config: &MiningConfig,
) -> std::result::Result<QueryQuestionPair, FilterReason> {
    let domain = record
        .clicked_url
        .as_deref()
        .and_then(|url| matching_domain(url, &config.cqa_domains))
        .ok_or(FilterReason::NotCqaDomain)?;
    let question = extract_question(record).ok_or(FilterReason::EmptyField)?;
    let query_tokens = tokenize(&record.query);
    let question_tokens = tokenize(&question);
    let decision = filter_tokens(&query_tokens, &question_tokens, &config.filter);
    if !decision.accepted {
        return Err(decision.reason);
    }
    Ok(QueryQuestionPair::new(
        query_tokens,
        normalize_question(question_tokens),
        domain.to_ascii_lowercase(),
    ))
}

/// Runs the whole mining procedure over a JSONL log stream. Malformed lines
/// are counted and skipped; a read failure aborts with the number of
/// records processed so far.
pub fn mine_corpus<R: BufRead>(log: R, config: &MiningConfig) -> Result<MiningOutput> {
    let mut report = MiningReport::default();
    for reason in FilterReason::REJECTIONS {
        report.rejections.insert(reason, 0);
    }
    let mut seen: HashSet<(Vec<String>, Vec<String>)> = HashSet::new();
    let mut pairs = Vec::new();

    for (idx, line) in log.lines().enumerate() {
        let line = line.map_err(|source| Error::Stream {
            records: report.records_read,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.records_read += 1;
        let record = match parse_log_line(&line, idx + 1) {
            Ok(r) => r,
            Err(e) => {
                report.malformed_skipped += 1;
                report.parse_errors.push((idx + 1, e.to_string()));
                continue;
            }
        };
        match mine_record(&record, config) {
            Ok(pair) => {
                if seen.insert((pair.query_tokens.clone(), pair.question_tokens.clone())) {
                    pairs.push(pair);
                } else {
                    report.duplicates_dropped += 1;
                }
            }
            Err(reason) => *report.rejections.entry(reason).or_default() += 1,
        }
    }
    report.pairs_emitted = pairs.len();
    let corpus = ParallelCorpus::new(pairs);
    let stats = if corpus.is_empty() {
        None
    } else {
        Some(compute_stats(&corpus)?)
    };
    Ok(MiningOutput {
        corpus,
        stats,
        report,
    })
}
