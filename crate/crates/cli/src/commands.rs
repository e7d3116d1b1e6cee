use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use kw2q_core::annotation::{load_tasks, AnnotationStore, AssignmentConfig};
use kw2q_core::baselines::identity_translate;
use kw2q_core::corpus::{compute_stats, generate_synthetic_corpus, mine_corpus, split_corpus, ParallelCorpus, TemplateSet};
use kw2q_core::eval::{aggregate_human_judgments, corpus_bleu, Judgment};
use kw2q_core::nmt::{
    beam_decode, encode_corpus, greedy_decode, load_checkpoint, save_checkpoint, train_pairs_with, ModelConfig,
    ModelParams,
};
use kw2q_core::text::{join_tokens, tokenize, Vocabulary};
use log::info;
use serde::Serialize;

use crate::config::{FilterSection, ModelSection, Resolved, TrainSection};
use crate::System;

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_corpus(path: &Path) -> Result<ParallelCorpus> {
    ParallelCorpus::load_tsv(path).with_context(|| format!("reading corpus {}", path.display()))
}

pub fn mine(cfg: &Resolved, logs: &Path, out: &Path, report: Option<&Path>, filter: &FilterSection) -> Result<()> {
    let mining = cfg.mining(filter)?;
    let result = mine_corpus(open(logs)?, &mining)?;
    let r = &result.report;
    info!(
        "read {} records: {} pairs, {} duplicates, {} rejected, {} malformed",
        r.records_read,
        r.pairs_emitted,
        r.duplicates_dropped,
        r.total_rejected(),
        r.malformed_skipped
    );
    for (line, message) in r.parse_errors.iter().take(10) {
        log::warn!("line {line}: {message}");
    }
    result.corpus.save_tsv(out)?;
    if let Some(path) = report {
        let body = serde_json::json!({ "report": result.report, "stats": result.stats });
        fs::write(path, serde_json::to_string_pretty(&body)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

pub fn synth(cfg: &Resolved, count: usize, out: &Path, templates: Option<&Path>) -> Result<()> {
    let set: TemplateSet = match templates {
        Some(path) => serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))?,
        None => TemplateSet::default(),
    };
    let corpus = generate_synthetic_corpus(&set.templates, &set.entities, count, cfg.seed)?;
    corpus.save_tsv(out)?;
    info!("wrote {} synthetic pairs to {}", corpus.len(), out.display());
    Ok(())
}

pub fn stats(corpus: &Path) -> Result<()> {
    print_json(&compute_stats(&load_corpus(corpus)?)?)
}

pub fn split(cfg: &Resolved, corpus: &Path, out_dir: &Path, test_size: usize, dev_size: usize) -> Result<()> {
    let corpus = load_corpus(corpus)?;
    let s = split_corpus(&corpus, test_size, dev_size, cfg.seed)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for (name, part) in [("train.tsv", &s.train), ("dev.tsv", &s.dev), ("test.tsv", &s.test)] {
        part.save_tsv(&out_dir.join(name))?;
    }
    info!("split {} pairs into {}/{}/{}", corpus.len(), s.train.len(), s.dev.len(), s.test.len());
    Ok(())
}

pub fn build_vocab(cfg: &Resolved, corpus: &Path, out: &Path, model: &ModelSection) -> Result<()> {
    let vocab = kw2q_core::text::build_vocab(&load_corpus(corpus)?, cfg.max_vocab(model))?;
    vocab.save(out)?;
    info!("vocabulary of {} tokens, hash {}", vocab.len(), vocab.content_hash());
    Ok(())
}

pub struct TrainPaths<'a> {
    pub train: &'a Path,
    pub dev: Option<&'a Path>,
    pub vocab: &'a Path,
    pub out_dir: &'a Path,
    pub init: Option<&'a Path>,
}

pub fn train(cfg: &Resolved, paths: TrainPaths<'_>, model: &ModelSection, flags: &TrainSection) -> Result<()> {
    let vocab = Vocabulary::load(paths.vocab)?;
    let train_corpus = load_corpus(paths.train)?;
    let dev_corpus = match paths.dev {
        Some(p) => load_corpus(p)?,
        None => ParallelCorpus::default(),
    };
    let (mcfg, init): (ModelConfig, Option<ModelParams>) = match paths.init {
        Some(p) => {
            let (params, c) = load_checkpoint(p, &vocab)?;
            (c, Some(params))
        }
        None => (cfg.model(vocab.len(), model)?, None),
    };
    let tcfg = cfg.train(flags)?;
    fs::create_dir_all(paths.out_dir).with_context(|| format!("creating {}", paths.out_dir.display()))?;

    let train_pairs = encode_corpus(&train_corpus, &vocab);
    let dev_pairs = encode_corpus(&dev_corpus, &vocab);
    let hash = vocab.content_hash();
    info!(
        "training on {} pairs ({} dev), vocab {}, embed {} hidden {} layers {}/{}, {} epochs",
        train_pairs.len(),
        dev_pairs.len(),
        mcfg.vocab_size,
        mcfg.embed_dim,
        mcfg.hidden_dim,
        mcfg.encoder_layers,
        mcfg.decoder_layers,
        tcfg.epochs
    );

    let mut log = create(&paths.out_dir.join("train_log.jsonl"))?;
    let mut io_error: Option<anyhow::Error> = None;
    let out_dir = paths.out_dir.to_path_buf();
    let outcome = train_pairs_with(&train_pairs, &dev_pairs, &mcfg, &tcfg, init, |record, params| {
        info!(
            "epoch {} lr {:.5} train {:.4} dev {} ({:.1}s)",
            record.epoch,
            record.lr,
            record.train_loss_per_token,
            record.dev_nll_per_token.map_or("-".into(), |d| format!("{d:.4}")),
            record.wall_seconds
        );
        let written = serde_json::to_string(record)
            .map_err(anyhow::Error::from)
            .and_then(|line| writeln!(log, "{line}").and_then(|_| log.flush()).map_err(Into::into));
        if let Err(e) = written {
            io_error = Some(e);
            return Err(kw2q_core::Error::InvalidArgument("could not write the training log".into()));
        }
        save_checkpoint(params, &mcfg, &hash, &out_dir.join(format!("epoch-{:03}.ckpt", record.epoch)))
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let outcome = outcome?;
    save_checkpoint(&outcome.best_params, &mcfg, &hash, &paths.out_dir.join("best.ckpt"))?;
    save_checkpoint(&outcome.params, &mcfg, &hash, &paths.out_dir.join("last.ckpt"))?;
    info!("best epoch {}", outcome.best_epoch);
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let reader: Box<dyn BufRead> = if path == Path::new("-") {
        Box::new(BufReader::new(io::stdin()))
    } else {
        Box::new(open(path)?)
    };
    reader.lines().collect::<io::Result<_>>().with_context(|| format!("reading {}", path.display()))
}

pub fn translate(
    input: &Path,
    output: &Path,
    system: System,
    model: Option<&Path>,
    vocab: Option<&Path>,
    beam: Option<usize>,
    alpha: f64,
) -> Result<()> {
    let queries = read_lines(input)?;
    let mut out: Box<dyn Write> = if output == Path::new("-") {
        Box::new(BufWriter::new(io::stdout()))
    } else {
        Box::new(create(output)?)
    };
    match system {
        System::Identity => {
            for q in &queries {
                writeln!(out, "{}", join_tokens(&identity_translate(&tokenize(q))))?;
            }
        }
        System::Nmt => {
            let (Some(model), Some(vocab)) = (model, vocab) else {
                bail!("--system nmt needs --model and --vocab");
            };
            ensure!(beam != Some(0), "--beam must be at least 1");
            let vocab = Vocabulary::load(vocab)?;
            let (params, cfg) = load_checkpoint(model, &vocab)?;
            for q in &queries {
                let tokens = tokenize(q);
                let ids = if tokens.is_empty() {
                    Vec::new()
                } else {
                    let src = vocab.encode(&tokens, false);
                    match beam {
                        None => greedy_decode(&src, &params, &cfg)?,
                        Some(k) => beam_decode(&src, &params, &cfg, k, alpha)?.swap_remove(0).tokens,
                    }
                };
                writeln!(out, "{}", join_tokens(&vocab.decode_ids(&ids)?))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn token_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_lines(path)?.iter().map(|l| tokenize(l)).collect())
}

pub fn evaluate(hyp: &Path, reference: &Path) -> Result<()> {
    let hyps = token_lines(hyp)?;
    let refs = token_lines(reference)?;
    ensure!(
        hyps.len() == refs.len(),
        "{} has {} lines but {} has {}",
        hyp.display(),
        hyps.len(),
        reference.display(),
        refs.len()
    );
    print_json(&corpus_bleu(&hyps, &refs)?)
}

pub fn human_report(judgments: &Path) -> Result<()> {
    let judgments = Judgment::read_jsonl(open(judgments)?)?;
    print_json(&aggregate_human_judgments(&judgments))
}

pub fn serve(
    tasks: &Path,
    judgments: &Path,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
    max_judgments_per_pair: Option<usize>,
) -> Result<()> {
    ensure!(max_judgments_per_pair != Some(0), "--max-judgments-per-pair must be at least 1");
    let pool = load_tasks(open(tasks)?).with_context(|| format!("loading {}", tasks.display()))?;
    let config = AssignmentConfig { max_judgments_per_pair };
    let store = Arc::new(AnnotationStore::with_log(pool, config, judgments)?);
    let p = store.progress();
    info!("{} tasks, {} judgments so far; listening on http://{addr}", p.total, p.judgments);
    kw2q_serve::run(addr, store, static_dir)?;
    Ok(())
}
