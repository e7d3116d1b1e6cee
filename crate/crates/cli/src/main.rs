mod commands;
mod config;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{FileConfig, FilterSection, ModelSection, Profile, Resolved, TrainSection};

#[derive(Parser, Debug)]
#[command(name = "kw2q", version, about = "Keyword query to question generation")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hyperparameter preset (default desk).
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    Identity,
    Nmt,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine query/question pairs from a JSONL search log into a TSV corpus.
    Mine {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the mining report and corpus statistics as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterSection,
    },
    /// Generate a templated synthetic corpus.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        /// JSON `{templates: [{query, question}], entities: {SLOT: [...]}}`;
        /// built-in templates when absent.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Print corpus statistics as JSON.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Split a corpus into train/dev/test TSV files.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        test_size: usize,
        #[arg(long, default_value_t = 100)]
        dev_size: usize,
    },
    /// Build the shared vocabulary from a training corpus.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelSection,
    },
    /// Train the attention model; writes per-epoch and best checkpoints and
    /// a JSONL training log into the output directory.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Continue from a checkpoint instead of a fresh initialization.
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        model: ModelSection,
        #[command(flatten)]
        train_flags: TrainSection,
    },
    /// Turn queries (one per line) into questions (one per line).
    Translate {
        /// Input file, `-` for standard input.
        #[arg(long, default_value = "-")]
        input: PathBuf,
        /// Output file, `-` for standard output.
        #[arg(long, default_value = "-")]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = System::Nmt)]
        system: System,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Beam width; greedy decoding when absent.
        #[arg(long)]
        beam: Option<usize>,
        /// Length-normalization exponent for beam ranking.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Corpus BLEU of line-aligned hypothesis and reference files, as JSON.
    Evaluate {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Aggregate human judgments (JSONL) per system, as JSON.
    HumanReport {
        #[arg(long)]
        judgments: PathBuf,
    },
    /// Run the annotation service.
    Serve {
        /// JSONL `{pair_id, query, generated_question, system_label}`.
        #[arg(long)]
        tasks: PathBuf,
        /// Append-only judgment log, replayed on start.
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory holding the UI bundle.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Cap on judgments per pair; 1 partitions the pool among judges.
        #[arg(long)]
        max_judgments_per_pair: Option<usize>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let cfg = Resolved::new(file, cli.seed, cli.profile);
    match cli.command {
        Command::Mine { logs, out, report, filter } => commands::mine(&cfg, &logs, &out, report.as_deref(), &filter),
        Command::Synth { count, out, templates } => commands::synth(&cfg, count, &out, templates.as_deref()),
        Command::Stats { corpus } => commands::stats(&corpus),
        Command::Split { corpus, out_dir, test_size, dev_size } => {
            commands::split(&cfg, &corpus, &out_dir, test_size, dev_size)
        }
        Command::BuildVocab { corpus, out, model } => commands::build_vocab(&cfg, &corpus, &out, &model),
        Command::Train { train, dev, vocab, out_dir, init, model, train_flags } => commands::train(
            &cfg,
            commands::TrainPaths {
                train: &train,
                dev: dev.as_deref(),
                vocab: &vocab,
                out_dir: &out_dir,
                init: init.as_deref(),
            },
            &model,
            &train_flags,
        ),
        Command::Translate { input, output, system, model, vocab, beam, alpha } => commands::translate(
            &input,
            &output,
            system,
            model.as_deref(),
            vocab.as_deref(),
            beam,
            alpha,
        ),
        Command::Evaluate { hyp, reference } => commands::evaluate(&hyp, &reference),
        Command::HumanReport { judgments } => commands::human_report(&judgments),
        Command::Serve { tasks, judgments, addr, static_dir, max_judgments_per_pair } => {
            commands::serve(&tasks, &judgments, addr, static_dir, max_judgments_per_pair)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_secs()
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
