//! `isrl`: ingest frames, train the recurrent frame model, score selectional
//! preferences, resolve implicit roles and evaluate, with a run manifest for
//! every command.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Architecture, CandidateSet, CorpusFormat};

/// Errors raised by the CLI itself, as opposed to the library.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Verification(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "isrl",
    version,
    about = "Recurrent frame models, selectional preferences and implicit role resolution"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Pipeline configuration (TOML); flags override its values [default: built-in defaults]
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Run manifest path [default: <primary output>.manifest.json]
    #[arg(long, global = true, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug) [default: warnings only]
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a corpus into frame records and a vocabulary
    Ingest(IngestArgs),
    /// Train a frame model on frame records
    Train(TrainArgs),
    /// Score predicate/word/label triples with a trained model
    Selpref(SelprefArgs),
    /// Fill missing roles of nominal predicates in documents
    Resolve(ResolveArgs),
    /// Score predictions against gold fillers
    Evaluate(EvaluateArgs),
    /// Check gradients and the pruned marginalization on random models
    Verify(VerifyArgs),
    /// Write the synthetic grammar fixture (frames, lexicon, documents, queries, gold)
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Input corpus [config: paths.corpus]
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Corpus format [default: columns]
    #[arg(long, value_enum)]
    pub format: Option<CorpusFormat>,
    /// Skip sentences with at least this many tokens; 0 keeps all [default: 100]
    #[arg(long, value_name = "N")]
    pub max_sentence_tokens: Option<usize>,
    /// Words seen fewer times become UNK [default: 2]
    #[arg(long, value_name = "N")]
    pub min_count: Option<u64>,
    /// Frame-record output [config: paths.frames]
    #[arg(long, value_name = "FILE")]
    pub frames: Option<PathBuf>,
    /// Vocabulary output [config: paths.vocab]
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Frame records to train on [config: paths.frames]
    #[arg(long, value_name = "FILE")]
    pub frames: Option<PathBuf>,
    /// Vocabulary from `ingest`; built from the frames when absent [config: paths.vocab]
    #[arg(long, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    /// Pretrained word vectors for separate mode [config: paths.embeddings; default: random init]
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Model file to write [config: paths.model]
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Training report (JSON) [default: <model>.report.json]
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Architecture [default: separate]
    #[arg(long, value_enum)]
    pub mode: Option<Architecture>,
    /// Word embedding width, separate mode [default: 50]
    #[arg(long, value_name = "N")]
    pub word_dim: Option<usize>,
    /// Label embedding width, separate mode [default: 16]
    #[arg(long, value_name = "N")]
    pub label_dim: Option<usize>,
    /// Unit embedding width, joint mode [default: 64]
    #[arg(long, value_name = "N")]
    pub joint_dim: Option<usize>,
    /// LSTM and softmax weights start in U[-r, r] [default: 0.08]
    #[arg(long, value_name = "R")]
    pub init_range: Option<f64>,
    /// Training epochs [default: 120]
    #[arg(long, value_name = "N")]
    pub epochs: Option<usize>,
    /// Rescale gradients whose L2 norm exceeds this [default: no clipping]
    #[arg(long, value_name = "NORM")]
    pub max_grad_norm: Option<f64>,
    /// Keep the word table fixed (separate mode) [default: false]
    #[arg(long)]
    pub freeze_word_embeddings: bool,
    /// Vocabulary threshold when no vocabulary file is given [default: 2]
    #[arg(long, value_name = "N")]
    pub min_count: Option<u64>,
    /// Weight initialization seed [default: 1]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Frame order seed [default: 1]
    #[arg(long, value_name = "SEED")]
    pub shuffle_seed: Option<u64>,
    /// Seed for rows of words missing from pretrained vectors [default: 1]
    #[arg(long, value_name = "SEED")]
    pub embedding_seed: Option<u64>,
}

#[derive(Debug, Args, Clone)]
pub struct SelprefFlags {
    /// Branch width k of the expansion tree [default: 1]
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Maximum frame length T in arguments [default: 4]
    #[arg(long, value_name = "T")]
    pub depth: Option<usize>,
    /// Let EOS take branch slots as a dead end [default: false]
    #[arg(long)]
    pub expand_eos: bool,
}

#[derive(Debug, Args)]
pub struct SelprefArgs {
    /// Trained model [config: paths.model]
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Lines of predicate<TAB>word<TAB>label [config: paths.triples]
    #[arg(long, value_name = "FILE")]
    pub triples: Option<PathBuf>,
    /// Scored triples output
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub selpref: SelprefFlags,
    /// Add an exhaustive-enumeration column (small models only) [default: false]
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    /// Trained model; not needed with --baseline-only [config: paths.model]
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Documents as JSON lines, one sentence per line [config: paths.documents]
    #[arg(long, value_name = "FILE")]
    pub documents: Option<PathBuf>,
    /// Queries: doc<TAB>sentence<TAB>token<TAB>nominal<TAB>label [config: paths.queries]
    #[arg(long, value_name = "FILE")]
    pub queries: Option<PathBuf>,
    /// Nominal-to-verb lexicon [config: paths.lexicon; default: none]
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Predictions output [config: paths.predictions]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Selection threshold s [default: 0.0003]
    #[arg(long, value_name = "S")]
    pub threshold: Option<f64>,
    /// Recency magnitude z [default: 0.00005]
    #[arg(long, value_name = "Z")]
    pub recency_magnitude: Option<f64>,
    /// Recency decay alpha in (0, 1) [default: 0.5]
    #[arg(long, value_name = "ALPHA")]
    pub recency_decay: Option<f64>,
    /// Sentences searched: the query sentence and the ones before it [default: 3]
    #[arg(long, value_name = "N")]
    pub window: Option<usize>,
    /// Which tokens may fill a role [default: nominal-heads]
    #[arg(long, value_enum)]
    pub candidates: Option<CandidateSet>,
    /// Compare the raw score with the threshold instead of the recency-adjusted one [default: false]
    #[arg(long)]
    pub threshold_on_raw: bool,
    /// Only fill roles from explicit annotations of the same predicate [default: false]
    #[arg(long)]
    pub baseline_only: bool,
    /// Worker threads; 0 uses every core [default: 0]
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub selpref: SelprefFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Gold fillers: key<TAB>s:t,s:t;s:t [config: paths.gold]
    #[arg(long, value_name = "FILE")]
    pub gold: Option<PathBuf>,
    /// Predictions from `resolve` [config: paths.predictions]
    #[arg(long, value_name = "FILE")]
    pub predictions: Option<PathBuf>,
    /// Machine-readable metrics (key=value lines)
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write the human-readable table here [default: stdout only]
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Verification report (JSON)
    #[arg(long, value_name = "FILE", default_value = "verify-report.json")]
    pub out: PathBuf,
    /// Random models per architecture for the gradient check
    #[arg(long, value_name = "N", default_value_t = 10)]
    pub models: usize,
    /// Embedding (and hidden) width of the random models
    #[arg(long, value_name = "N", default_value_t = 8)]
    pub dim: usize,
    /// Finite-difference step
    #[arg(long, value_name = "EPS", default_value_t = 1e-5)]
    pub epsilon: f64,
    /// Largest accepted relative gradient error
    #[arg(long, value_name = "TOL", default_value_t = 1e-4)]
    pub tolerance: f64,
    /// Take differences in plain f64 instead of double-double [default: false]
    #[arg(long)]
    pub plain_f64: bool,
    /// Random models for the marginalization oracle check
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub oracle_models: usize,
    /// Corrupt one analytic gradient; verification must then fail [default: false]
    #[arg(long)]
    pub inject_gradient_fault: bool,
    /// Seed for the random models [default: 0]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for the fixture files (created if missing)
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// Training frames to sample
    #[arg(long, value_name = "N", default_value_t = 2000)]
    pub frames: usize,
    /// Discourse documents, one query each
    #[arg(long, value_name = "N", default_value_t = 50)]
    pub documents: usize,
    /// Sampling seed [default: 7]
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
}

/// Short machine-readable class of an error.
fn error_kind(err: &anyhow::Error) -> &'static str {
    use isrl::eval::EvalError;
    use isrl::frames::DataError;
    use isrl::prnsfm::ModelError;
    use isrl::resolver::ResolveError;
    use isrl::selpref::SelPrefError;

    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => "usage",
                Failure::Input(_) => "input",
                Failure::Config(_) => "config",
                Failure::Verification(_) => "verification",
            };
        }
        if cause.is::<DataError>() {
            return "data";
        }
        if cause.is::<ModelError>() {
            return "model";
        }
        if cause.is::<SelPrefError>() {
            return "selpref";
        }
        if cause.is::<ResolveError>() {
            return "resolve";
        }
        if cause.is::<EvalError>() {
            return "evaluate";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "internal"
}

fn report(kind: &str, message: &str) {
    let message = message.replace(['\n', '\r'], " ");
    eprintln!("error: kind={kind} message={message}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            report("usage", first);
            return ExitCode::from(2);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(error_kind(&e), &format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
