//! `udssm` command-line tool.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use udssm::Error;

mod commands;
mod runconfig;

#[derive(Parser, Debug)]
#[command(
    name = "udssm",
    version,
    about = "Unsupervised pronoun resolution: mine pairs, train, evaluate"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mine pseudo-labelled training pairs from a corpus.
    GenData(GenDataArgs),
    /// Build a vocabulary file from pair files.
    BuildVocab(BuildVocabArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score question files with one or more checkpoints.
    Eval(EvalArgs),
    /// Convert a challenge collection XML file to a question file.
    Convert(ConvertArgs),
    /// Compare analytic and finite-difference gradients on a tiny model.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// One sentence per line, tagged with the built-in heuristics.
    Raw,
    /// `surface<TAB>TAG` lines, blank line between sentences.
    Tagged,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Which pairing heuristic to apply.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    assumption: u8,
    /// Input corpus.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputFormat::Raw)]
    input_format: InputFormat,
    /// Extra nouns for the raw tagger, one per line.
    #[arg(long, value_name = "PATH")]
    nouns: Option<PathBuf>,
    /// Shortest sentence kept, in tokens.
    #[arg(long, default_value_t = 10)]
    min_len: usize,
    /// Longest sentence kept, in tokens.
    #[arg(long, default_value_t = 50)]
    max_len: usize,
    /// Output pair file (one JSON object per line).
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BuildVocabArgs {
    /// Pair files of either kind.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',', value_name = "PATH")]
    pairs: Vec<PathBuf>,
    /// Tokens seen fewer times are dropped unless the embedding file covers them.
    #[arg(long, default_value_t = 5)]
    min_count: usize,
    /// Pretrained vectors; covered tokens are kept regardless of count.
    #[arg(long, value_name = "PATH")]
    glove: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug, Default)]
struct TrainArgs {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// udssm1 or udssm2.
    #[arg(long)]
    model: Option<String>,
    /// Training pairs matching the model.
    #[arg(long, value_name = "PATH")]
    pairs: Option<PathBuf>,
    /// Held-out pairs; without it a random share of --pairs is held out.
    #[arg(long, value_name = "PATH")]
    val_pairs: Option<PathBuf>,
    /// Vocabulary file; built from the pairs when absent.
    #[arg(long, value_name = "PATH")]
    vocab: Option<PathBuf>,
    /// Minimum count when the vocabulary is built here [default: 5].
    #[arg(long)]
    min_count: Option<usize>,
    /// Pretrained vectors whose width sets the embedding size.
    #[arg(long, value_name = "PATH")]
    glove: Option<PathBuf>,
    /// Embedding width [default: 300].
    #[arg(long)]
    embedding_dim: Option<usize>,
    /// LSTM hidden size per direction [default: 300].
    #[arg(long)]
    hidden: Option<usize>,
    /// Checkpoint to write.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Learning rate [default: 0.002].
    #[arg(long)]
    lr: Option<f64>,
    /// First-moment decay [default: 0.9].
    #[arg(long)]
    beta1: Option<f64>,
    /// Second-moment decay [default: 0.999].
    #[arg(long)]
    beta2: Option<f64>,
    /// Denominator offset [default: 1e-8].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Dropout rate [default: 0.1].
    #[arg(long)]
    dropout: Option<f64>,
    /// Examples per batch [default: 50].
    #[arg(long)]
    batch_size: Option<usize>,
    /// Epoch limit [default: 10].
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Non-improving epochs before stopping [default: 3].
    #[arg(long)]
    patience: Option<usize>,
    /// Held-out share of --pairs, 0.05 = 5% [default: 0.05].
    #[arg(long)]
    val_fraction: Option<f64>,
    /// Random seed for initialization, shuffling and dropout [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Checkpoints, comma separated.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',', value_name = "PATH")]
    model: Vec<PathBuf>,
    /// Question file (one JSON object per line).
    #[arg(long, value_name = "PATH")]
    questions: PathBuf,
    /// Combine all checkpoints into one prediction.
    #[arg(long)]
    ensemble: bool,
    /// Write the full report as JSON.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long, value_name = "PATH")]
    xml: PathBuf,
    /// wsc or pdp; sets the id prefix.
    #[arg(long)]
    kind: String,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// udssm1 or udssm2.
    #[arg(long)]
    model: String,
    /// `tiny` (d=8, h=8) or `DxH`, e.g. `4x6`.
    #[arg(long, default_value = "tiny")]
    dims: String,
    /// Coordinates checked per parameter; all when absent.
    #[arg(long)]
    max_coords: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::BuildVocab(a) => commands::build_vocab(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Convert(a) => commands::convert(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
