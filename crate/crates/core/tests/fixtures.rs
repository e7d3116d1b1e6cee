mod common;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use common::fixture;
use kw2q_core::corpus::{mine_corpus, FilterReason, MiningConfig};
use kw2q_core::eval::{aggregate_human_judgments, corpus_bleu, Judgment, SystemLabel};
use kw2q_core::text::tokenize;
use serde_json::Value;

fn expected(name: &str) -> Value {
    serde_json::from_reader(File::open(fixture(name)).unwrap()).unwrap()
}

#[test]
fn mining_fixture_matches_independent_trace() {
    let exp = expected("mining_100.expected.json");
    let log = BufReader::new(File::open(fixture("mining_100.jsonl")).unwrap());
    let out = mine_corpus(log, &MiningConfig::default()).unwrap();
    let r = &out.report;

    assert_eq!(r.records_read as u64, exp["records_read"]);
    assert_eq!(r.malformed_skipped as u64, exp["malformed_skipped"]);
    assert_eq!(r.pairs_emitted as u64, exp["pairs_emitted"]);
    assert_eq!(r.duplicates_dropped as u64, exp["duplicates_dropped"]);
    for reason in FilterReason::REJECTIONS {
        let key = serde_json::to_value(reason).unwrap();
        assert_eq!(r.rejected(reason) as u64, exp["rejections"][key.as_str().unwrap()], "{reason:?}");
    }
    assert_eq!(
        r.records_read,
        r.pairs_emitted + r.duplicates_dropped + r.total_rejected() + r.malformed_skipped
    );

    let tsv: Vec<String> = out.corpus.pairs.iter().map(|p| p.to_tsv_line()).collect();
    let exp_tsv: Vec<String> = serde_json::from_value(exp["tsv"].clone()).unwrap();
    assert_eq!(tsv, exp_tsv);
}

#[test]
fn mined_corpus_stats_match_hand_counts() {
    let exp = &expected("mining_100.expected.json")["stats"];
    let log = BufReader::new(File::open(fixture("mining_100.jsonl")).unwrap());
    let out = mine_corpus(log, &MiningConfig::default()).unwrap();
    let stats = out.stats.unwrap();
    let n = stats.pair_count as f64;

    let cdf: BTreeMap<String, (u64, u64)> = serde_json::from_value(exp["query_length_cdf"].clone()).unwrap();
    assert_eq!(stats.query_length_cdf.len(), cdf.len());
    for (len, (num, den)) in cdf {
        assert_eq!(stats.query_length_cdf[&len.parse::<usize>().unwrap()], num as f64 / den as f64);
    }
    let types: BTreeMap<String, u64> = serde_json::from_value(exp["question_type_counts"].clone()).unwrap();
    let got: Vec<&String> = stats.question_type_distribution.keys().collect();
    assert_eq!(got, types.keys().collect::<Vec<_>>());
    for (word, count) in types {
        assert_eq!(stats.question_type_distribution[&word], count as f64 / n);
    }
    assert_eq!(stats.mean_query_length, exp["query_token_total"].as_u64().unwrap() as f64 / n);
    assert_eq!(stats.mean_question_length, exp["question_token_total"].as_u64().unwrap() as f64 / n);
}

#[test]
fn human_eval_fixture_matches_hand_counts() {
    let exp = expected("judgments_120.expected.json");
    let judgments = Judgment::read_jsonl(BufReader::new(File::open(fixture("judgments_120.jsonl")).unwrap())).unwrap();
    assert_eq!(judgments.len(), 120);
    let report = aggregate_human_judgments(&judgments);
    assert_eq!(report.total_judgments, 120);
    for (label, e) in [(SystemLabel::Nmt, &exp["NMT"]), (SystemLabel::Smt, &exp["SMT"])] {
        let s = report.system(label);
        assert_eq!(s.judgments as u64, e["judgments"]);
        assert_eq!(s.grammatical_yes as u64, e["grammatical_yes"]);
        assert_eq!(s.grammatical_fraction, e["grammatical_fraction"].as_f64().unwrap());
        assert_eq!(s.high_intent_fraction, e["high_intent_fraction"].as_f64().unwrap());
        for score in 1..=5u8 {
            assert_eq!(s.intent_histogram[&score] as u64, e["intent_histogram"][score.to_string()]);
        }
    }
    assert_eq!(report.system(SystemLabel::Nmt).grammatical_fraction, 0.86);
    assert_eq!(report.system(SystemLabel::Identity).judgments, 0);
}

#[test]
fn bleu_of_hypothesis_missing_final_question_mark() {
    // all n-gram precisions are 1; only the brevity penalty exp(1 - 7/6) applies
    let reference = tokenize("what is the capital of japan ?");
    let hyp = tokenize("what is the capital of japan");
    let report = corpus_bleu(&[hyp], &[reference.clone()]).unwrap();
    assert!((report.bleu - 84.648172).abs() < 1e-6, "{}", report.bleu);
    assert_eq!(corpus_bleu(&[reference.clone()], &[reference]).unwrap().bleu, 100.0);
}
