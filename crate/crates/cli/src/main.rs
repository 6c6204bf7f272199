//! Command-line pipeline: ingest, embed, train, predict, ensemble, evaluate.
//!
//! Exit codes: 0 on success, 1 for invalid input or usage, 2 for runtime
//! failures such as diverged training or I/O errors.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Error marker for problems with the user's input rather than the run.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Debug, Parser)]
#[command(name = "anchor-absa", version, about = "Unsupervised aspect extraction with anchored ensembles")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Semeval,
    Jsonl,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize SemEval XML or JSONL reviews into a tokenized corpus.
    Ingest(IngestArgs),
    /// Train skip-gram word embeddings on a corpus.
    Embed(EmbedArgs),
    /// Train an ABAE model, optionally anchored to prior labels.
    TrainAbae(TrainArgs),
    /// Predict an aspect per sentence with a trained model.
    PredictAbae(PredictArgs),
    /// Label sentences with the contrastive-attention prior.
    RunCat(CatArgs),
    /// Merge prior and ABAE predictions with the rule-based ensemble.
    EnsembleRule(EnsembleArgs),
    /// Score category predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// List the nearest words of each aspect.
    TopWords(TopWordsArgs),
    /// Write a generated three-topic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub format: InputFormat,
    /// Keep only sentences annotated with exactly one category.
    #[arg(long)]
    pub single_aspect: bool,
    /// Stopword list, one word per line; defaults to the built-in English list.
    #[arg(long, conflicts_with = "no_stopwords")]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub no_stopwords: bool,
    /// `word<TAB>TAG` lexicon used to tag tokens without tags.
    #[arg(long)]
    pub pos_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vocabulary TSV; defaults to `<out>.vocab.tsv`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Extra corpora whose text joins embedding training only.
    #[arg(long)]
    pub include: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Prior labels (`{"id","label"}` JSONL); enables the anchored penalty.
    #[arg(long)]
    pub anchors: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss history; defaults to `<out>.losses.csv`.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `aspect_id<TAB>Category` lines.
    #[arg(long, conflicts_with = "auto_map")]
    pub mapping: Option<PathBuf>,
    /// Map each aspect to the category with the nearest seed word.
    #[arg(long)]
    pub auto_map: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CatArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Prior predictions from `run-cat`.
    #[arg(long)]
    pub cat: PathBuf,
    /// Mapped predictions from `predict-abae`.
    #[arg(long)]
    pub abae: PathBuf,
    /// Named variant: nn-adj, only-nn, abae-misc, nn-adj-fost.
    #[arg(long)]
    pub preset: Option<String>,
    /// nn or nn-adj.
    #[arg(long)]
    pub candidates: Option<String>,
    /// Comma-separated subset of food,staff,ambience, or `none`.
    #[arg(long)]
    pub scope: Option<String>,
    /// abae-misc or misc.
    #[arg(long)]
    pub fallback: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSONL with `id` and `category` (null counts as Miscellaneous).
    #[arg(long)]
    pub pred: PathBuf,
    /// Corpus carrying the gold categories.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// `present`, `all`, or a comma-separated category list.
    #[arg(long, default_value = "present")]
    pub labels: String,
    /// JSON report to compare against; deltas are printed as this − baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TopWordsArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(short, long, default_value_t = 10)]
    pub n: usize,
    /// Also write the nearest-seed mapping as an editable mapping file.
    #[arg(long)]
    pub write_mapping: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub sentences: Option<usize>,
    #[arg(long)]
    pub words_per_topic: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use anchor_absa::Error as E;
    for cause in err.chain() {
        if cause.is::<Invalid>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Diverged { .. } | E::NonFinite(_) | E::Io(_) => 2,
                _ => 1,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
