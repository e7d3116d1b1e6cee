//! Task pool and judgment log behind the human-evaluation service.
//!
//! Judges see the query and the generated question, never the system that
//! produced it. Each judge is handed the unjudged task with the fewest
//! judgments so far (ties: smallest pair id) and keeps that assignment until
//! they submit it. Every accepted judgment is appended to a JSONL log
//! before it becomes visible, so the log is the source of truth on restart.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{IntentScore, Judgment, SystemLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("task file line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate pair_id {0:?}")]
    DuplicatePairId(String),
    #[error("unknown pair_id {0:?}")]
    UnknownPair(String),
    #[error("intent_score must be between 1 and 5, got {0}")]
    ScoreOutOfRange(i64),
    #[error("judge_id must be a non-empty string")]
    InvalidJudge,
    #[error("judge {judge:?} already submitted a different judgment for pair {pair:?}")]
    Conflict { judge: String, pair: String },
    #[error("judgment log: {0}")]
    Log(String),
}

type Result<T> = std::result::Result<T, AnnotationError>;

/// Orders ids numerically when both are integers, otherwise as strings.
pub fn compare_pair_ids(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationTask {
    pub pair_id: String,
    pub query: String,
    pub generated_question: String,
    pub system_label: SystemLabel,
}

/// The judge-facing view of a task. Has no system label by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub pair_id: String,
    pub query: String,
    pub generated_question: String,
}

impl From<&AnnotationTask> for TaskView {
    fn from(t: &AnnotationTask) -> Self {
        TaskView {
            pair_id: t.pair_id.clone(),
            query: t.query.clone(),
            generated_question: t.generated_question.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(u64),
}

#[derive(Deserialize)]
struct TaskLine {
    pair_id: RawId,
    query: String,
    generated_question: String,
    system_label: String,
}

/// Reads the JSONL task file `{pair_id, query, generated_question,
/// system_label}`. Duplicate ids are an error.
pub fn load_tasks<R: BufRead>(reader: R) -> Result<Vec<AnnotationTask>> {
    let mut tasks = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let malformed = |message: String| AnnotationError::Malformed { line: i + 1, message };
        let line = line.map_err(|e| malformed(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: TaskLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let pair_id = match raw.pair_id {
            RawId::Text(s) => s,
            RawId::Number(n) => n.to_string(),
        };
        if pair_id.is_empty() {
            return Err(malformed("empty pair_id".into()));
        }
        if !seen.insert(pair_id.clone()) {
            return Err(AnnotationError::DuplicatePairId(pair_id));
        }
        tasks.push(AnnotationTask {
            pair_id,
            query: raw.query,
            generated_question: raw.generated_question,
            system_label: raw.system_label.parse().unwrap_or(SystemLabel::Other),
        });
    }
    Ok(tasks)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentConfig {
    /// Stop serving a pair once it has this many judgments (counting
    /// outstanding assignments). `None` lets every judge see every pair;
    /// `Some(1)` partitions the pool among judges.
    pub max_judgments_per_pair: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: usize,
    /// Pairs with at least one judgment.
    pub judged: usize,
    pub judgments: usize,
    pub per_judge: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    /// True when an identical judgment had already been stored.
    pub duplicate: bool,
    pub judgment: Judgment,
}

struct State {
    tasks: Vec<AnnotationTask>,
    index: HashMap<String, usize>,
    counts: Vec<usize>,
    judgments: Vec<Judgment>,
    by_judge_pair: HashMap<(String, usize), usize>,
    per_judge: BTreeMap<String, usize>,
    assigned: HashMap<String, usize>,
    log: Option<File>,
}

impl State {
    fn judged_by(&self, judge: &str, task: usize) -> bool {
        self.by_judge_pair.contains_key(&(judge.to_string(), task))
    }

    fn outstanding(&self, task: usize, except: &str) -> usize {
        self.assigned
            .iter()
            .filter(|(j, &t)| t == task && j.as_str() != except)
            .count()
    }

    fn record(&mut self, task: usize, judgment: Judgment) {
        self.counts[task] += 1;
        *self.per_judge.entry(judgment.judge_id.clone()).or_default() += 1;
        self.by_judge_pair
            .insert((judgment.judge_id.clone(), task), self.judgments.len());
        if self.assigned.get(&judgment.judge_id) == Some(&task) {
            self.assigned.remove(&judgment.judge_id);
        }
        self.judgments.push(judgment);
    }
}

pub struct AnnotationStore {
    state: Mutex<State>,
    config: AssignmentConfig,
}

impl AnnotationStore {
    /// In-memory store without a persistent log.
    pub fn new(tasks: Vec<AnnotationTask>, config: AssignmentConfig) -> Result<Self> {
        Self::build(tasks, config, None, Vec::new())
    }

    /// Store backed by an append-only judgment log. Judgments already in the
    /// log are replayed first.
    pub fn with_log(tasks: Vec<AnnotationTask>, config: AssignmentConfig, log_path: &Path) -> Result<Self> {
        let log_err = |e: std::io::Error| AnnotationError::Log(format!("{}: {e}", log_path.display()));
        let existing = if log_path.exists() {
            let file = File::open(log_path).map_err(log_err)?;
            crate::eval::Judgment::read_jsonl(BufReader::new(file))
                .map_err(|e| AnnotationError::Log(e.to_string()))?
        } else {
            Vec::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(log_err)?;
        Self::build(tasks, config, Some(file), existing)
    }

    fn build(
        mut tasks: Vec<AnnotationTask>,
        config: AssignmentConfig,
        log: Option<File>,
        replay: Vec<Judgment>,
    ) -> Result<Self> {
        tasks.sort_by(|a, b| compare_pair_ids(&a.pair_id, &b.pair_id));
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.pair_id.clone(), i).is_some() {
                return Err(AnnotationError::DuplicatePairId(t.pair_id.clone()));
            }
        }
        let mut state = State {
            counts: vec![0; tasks.len()],
            tasks,
            index,
            judgments: Vec::new(),
            by_judge_pair: HashMap::new(),
            per_judge: BTreeMap::new(),
            assigned: HashMap::new(),
            log,
        };
        for j in replay {
            let task = *state
                .index
                .get(&j.pair_id)
                .ok_or_else(|| AnnotationError::UnknownPair(j.pair_id.clone()))?;
            if !state.judged_by(&j.judge_id, task) {
                state.record(task, j);
            }
        }
        Ok(AnnotationStore {
            state: Mutex::new(state),
            config,
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        // a panic while holding the lock cannot leave the state half-updated
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// The judge's current assignment, or the least-judged task they have
    /// not judged yet. `None` once the judge has nothing left.
    pub fn next_task(&self, judge_id: &str) -> Result<Option<TaskView>> {
        if judge_id.trim().is_empty() {
            return Err(AnnotationError::InvalidJudge);
        }
        let mut st = self.lock();
        if let Some(&task) = st.assigned.get(judge_id) {
            if !st.judged_by(judge_id, task) {
                return Ok(Some(TaskView::from(&st.tasks[task])));
            }
        }
        let cap = self.config.max_judgments_per_pair;
        let choice = (0..st.tasks.len())
            .filter(|&t| !st.judged_by(judge_id, t))
            .filter(|&t| cap.map_or(true, |c| st.counts[t] + st.outstanding(t, judge_id) < c))
            .min_by_key(|&t| (st.counts[t], t));
        match choice {
            Some(task) => {
                st.assigned.insert(judge_id.to_string(), task);
                Ok(Some(TaskView::from(&st.tasks[task])))
            }
            None => {
                st.assigned.remove(judge_id);
                Ok(None)
            }
        }
    }

    pub fn submit_judgment(&self, judge_id: &str, pair_id: &str, grammatical: bool, intent_score: i64) -> Result<SubmitAck> {
        if judge_id.trim().is_empty() {
            return Err(AnnotationError::InvalidJudge);
        }
        let score = IntentScore::new(intent_score).ok_or(AnnotationError::ScoreOutOfRange(intent_score))?;
        let mut st = self.lock();
        let task = *st
            .index
            .get(pair_id)
            .ok_or_else(|| AnnotationError::UnknownPair(pair_id.to_string()))?;
        if let Some(&existing) = st.by_judge_pair.get(&(judge_id.to_string(), task)) {
            let prior = &st.judgments[existing];
            if prior.grammatical == grammatical && prior.intent_score == score {
                return Ok(SubmitAck {
                    duplicate: true,
                    judgment: prior.clone(),
                });
            }
            return Err(AnnotationError::Conflict {
                judge: judge_id.to_string(),
                pair: pair_id.to_string(),
            });
        }
        let judgment = Judgment {
            pair_id: pair_id.to_string(),
            judge_id: judge_id.to_string(),
            grammatical,
            intent_score: score,
            system_label: st.tasks[task].system_label,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        if let Some(log) = st.log.as_mut() {
            let mut line = serde_json::to_string(&judgment).map_err(|e| AnnotationError::Log(e.to_string()))?;
            line.push('\n');
            log.write_all(line.as_bytes())
                .and_then(|_| log.flush())
                .map_err(|e| AnnotationError::Log(e.to_string()))?;
        }
        st.record(task, judgment.clone());
        Ok(SubmitAck {
            duplicate: false,
            judgment,
        })
    }

    pub fn judgments(&self) -> Vec<Judgment> {
        self.lock().judgments.clone()
    }

    /// All judgments as JSONL in submission order.
    pub fn export_jsonl(&self) -> String {
        let st = self.lock();
        let mut out = String::new();
        for j in &st.judgments {
            out.push_str(&serde_json::to_string(j).expect("judgment serializes"));
            out.push('\n');
        }
        out
    }

    pub fn progress(&self) -> Progress {
        let st = self.lock();
        Progress {
            total: st.tasks.len(),
            judged: st.counts.iter().filter(|&&c| c > 0).count(),
            judgments: st.judgments.len(),
            per_judge: st.per_judge.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::aggregate_human_judgments;

    fn task(id: &str, label: SystemLabel) -> AnnotationTask {
        AnnotationTask {
            pair_id: id.into(),
            query: format!("query {id}"),
            generated_question: format!("what is {id} ?"),
            system_label: label,
        }
    }

    fn pool(ids: &[&str]) -> AnnotationStore {
        AnnotationStore::new(ids.iter().map(|i| task(i, SystemLabel::Nmt)).collect(), AssignmentConfig::default()).unwrap()
    }

    #[test]
    fn loads_task_file() {
        let text = "{\"pair_id\":\"p2\",\"query\":\"fever symptoms\",\"generated_question\":\"what are the symptoms of fever ?\",\"system_label\":\"NMT\"}\n\n{\"pair_id\":7,\"query\":\"q\",\"generated_question\":\"g\",\"system_label\":\"moses\"}\n";
        let tasks = load_tasks(text.as_bytes()).unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[1].pair_id, "7");
        assert_eq!(tasks[1].system_label, SystemLabel::Other);
        assert!(load_tasks(&b""[..]).unwrap().is_empty());

        let dup = format!("{}\n{}\n", text.lines().next().unwrap(), text.lines().next().unwrap());
        assert_eq!(load_tasks(dup.as_bytes()), Err(AnnotationError::DuplicatePairId("p2".into())));
        assert!(matches!(load_tasks(&b"{oops"[..]), Err(AnnotationError::Malformed { line: 1, .. })));
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        assert_eq!(compare_pair_ids("9", "10"), Ordering::Less);
        assert_eq!(compare_pair_ids("p10", "p9"), Ordering::Less);
        assert_eq!(compare_pair_ids("3", "a"), Ordering::Less);
    }

    #[test]
    fn fresh_judge_gets_smallest_id_and_keeps_it() {
        let s = pool(&["b", "a", "c"]);
        assert_eq!(s.next_task("j1").unwrap().unwrap().pair_id, "a");
        assert_eq!(s.next_task("j1").unwrap().unwrap().pair_id, "a");
    }

    #[test]
    fn least_judged_first() {
        let s = pool(&["a", "b"]);
        s.submit_judgment("j1", "a", true, 4).unwrap();
        assert_eq!(s.next_task("j2").unwrap().unwrap().pair_id, "b");
    }

    #[test]
    fn exhausted_judge() {
        let s = pool(&["a", "b"]);
        s.submit_judgment("j1", "a", true, 4).unwrap();
        s.submit_judgment("j1", "b", false, 2).unwrap();
        assert_eq!(s.next_task("j1").unwrap(), None);
        assert!(pool(&[]).next_task("j1").unwrap().is_none());
        assert_eq!(pool(&[]).progress().total, 0);
    }

    #[test]
    fn submission_rules() {
        let s = pool(&["p42"]);
        let ack = s.submit_judgment("judge1", "p42", true, 5).unwrap();
        assert!(!ack.duplicate);
        assert_eq!(ack.judgment.system_label, SystemLabel::Nmt);
        assert!(s.submit_judgment("judge1", "p42", true, 5).unwrap().duplicate);
        assert_eq!(s.export_jsonl().lines().count(), 1);
        assert_eq!(
            s.submit_judgment("judge1", "p42", false, 5),
            Err(AnnotationError::Conflict { judge: "judge1".into(), pair: "p42".into() })
        );
        assert_eq!(s.submit_judgment("judge1", "p42", true, 6), Err(AnnotationError::ScoreOutOfRange(6)));
        assert_eq!(s.submit_judgment("judge2", "p42", true, 0), Err(AnnotationError::ScoreOutOfRange(0)));
        assert_eq!(s.submit_judgment("judge2", "nope", true, 3), Err(AnnotationError::UnknownPair("nope".into())));
        assert_eq!(s.submit_judgment(" ", "p42", true, 3), Err(AnnotationError::InvalidJudge));
    }

    #[test]
    fn export_then_aggregate_matches_incremental() {
        let s = pool(&["1", "2", "3"]);
        s.submit_judgment("a", "1", true, 5).unwrap();
        s.submit_judgment("a", "2", false, 2).unwrap();
        s.submit_judgment("b", "1", true, 4).unwrap();
        let exported = s.export_jsonl();
        assert_eq!(exported.lines().count(), 3);
        let parsed = Judgment::read_jsonl(exported.as_bytes()).unwrap();
        assert_eq!(aggregate_human_judgments(&parsed), aggregate_human_judgments(&s.judgments()));
        assert_eq!(pool(&["x"]).export_jsonl(), "");
        let p = s.progress();
        assert_eq!((p.total, p.judged, p.judgments), (3, 2, 3));
        assert_eq!(p.per_judge["a"], 2);
    }

    #[test]
    fn partition_mode_hands_out_each_pair_once() {
        let tasks = vec![task("1", SystemLabel::Nmt), task("2", SystemLabel::Smt)];
        let s = AnnotationStore::new(tasks, AssignmentConfig { max_judgments_per_pair: Some(1) }).unwrap();
        let a = s.next_task("a").unwrap().unwrap();
        let b = s.next_task("b").unwrap().unwrap();
        assert_ne!(a.pair_id, b.pair_id);
        assert!(s.next_task("c").unwrap().is_none());
    }

    #[test]
    fn task_view_has_no_label() {
        let s = pool(&["1"]);
        let json = serde_json::to_string(&s.next_task("j").unwrap().unwrap()).unwrap();
        assert!(!json.contains("system_label"));
        assert!(!json.contains("NMT"));
    }

    #[test]
    fn log_is_replayed_on_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("judgments.jsonl");
        let tasks = vec![task("1", SystemLabel::Nmt), task("2", SystemLabel::Identity)];
        {
            let s = AnnotationStore::with_log(tasks.clone(), AssignmentConfig::default(), &path).unwrap();
            s.submit_judgment("a", "1", true, 5).unwrap();
            s.submit_judgment("a", "2", false, 1).unwrap();
        }
        let s = AnnotationStore::with_log(tasks, AssignmentConfig::default(), &path).unwrap();
        assert_eq!(s.progress().judgments, 2);
        assert!(s.next_task("a").unwrap().is_none());
        assert!(s.submit_judgment("a", "1", true, 5).unwrap().duplicate);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
    }

    #[test]
    fn concurrent_judges_never_repeat_a_pair() {
        use std::sync::Arc;
        let ids: Vec<String> = (0..40).map(|i| i.to_string()).collect();
        let tasks = ids.iter().map(|i| task(i, SystemLabel::Nmt)).collect();
        let s = Arc::new(AnnotationStore::new(tasks, AssignmentConfig::default()).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|j| {
                let s = Arc::clone(&s);
                std::thread::spawn(move || {
                    let judge = format!("judge{j}");
                    let mut seen = Vec::new();
                    while let Some(t) = s.next_task(&judge).unwrap() {
                        seen.push(t.pair_id.clone());
                        s.submit_judgment(&judge, &t.pair_id, j % 2 == 0, 1 + (j as i64 % 5)).unwrap();
                    }
                    seen
                })
            })
            .collect();
        for h in handles {
            let mut seen = h.join().unwrap();
            assert_eq!(seen.len(), 40);
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), 40);
        }
        assert_eq!(s.progress().judgments, 160);
    }
}
