use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "sfx", version, about = "Sound-effect cue detection for story text")]
pub struct Cli {
    /// Seed for sampling, fold assignment and training order.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Post-classification suppression rules.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    pub rules: Toggle,

    /// Named configuration; `paper-best` drops the now-word count.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    PaperBest,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Category {
    Action,
    Scene,
    Character,
    Onomatopoeia,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expand sound-bank tags with synonyms and embedding neighbours.
    BuildDb(BuildDbArgs),
    /// Detect candidate triggers and rank sounds for them.
    Retrieve(RetrieveArgs),
    /// Write the feature matrix for every labeled trigger.
    ExtractFeatures(ExtractArgs),
    /// Fit a classifier on the labeled triggers of a corpus.
    Train(TrainArgs),
    /// Cross-validate one feature configuration.
    Eval(EvalArgs),
    /// Cross-validate every standard feature-group ablation.
    Ablate(EvalArgs),
    /// Produce the cue sheet for a set of stories.
    Cue(CueArgs),
    /// Annotation statistics of a corpus.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
pub struct BuildDbArgs {
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// JSON object mapping a word to its synonyms.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Embedding neighbours kept per tag.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0.6)]
    pub min_sim: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Bm25Args {
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    /// Sound bank or tag database.
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub stories: PathBuf,
    #[command(flatten)]
    pub bm25: Bm25Args,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FeatureArgs {
    #[arg(long)]
    pub stories: PathBuf,
    /// Directory of `<category>.txt` word lists.
    #[arg(long)]
    pub lexicons: PathBuf,
    /// `label Class` lines mapping dependency labels to feature classes.
    #[arg(long)]
    pub deprel_map: PathBuf,
    /// Keep only triggers of this category.
    #[arg(long, value_enum)]
    pub category: Option<Category>,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub features: FeatureArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    /// Feature groups to exclude, e.g. `POS+Syntactic`.
    #[arg(long, default_value = "None")]
    pub mask: String,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Train on every labeled trigger instead of a class-balanced sample.
    #[arg(long)]
    pub no_balance: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Rule configuration file; built-in defaults when absent.
    #[arg(long)]
    pub rule_config: Option<PathBuf>,
    /// JSON file receiving per-fold numbers and the configuration used.
    #[arg(long)]
    pub detail: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CueArgs {
    #[arg(long)]
    pub stories: PathBuf,
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub lexicons: PathBuf,
    #[arg(long)]
    pub deprel_map: PathBuf,
    #[arg(long)]
    pub rule_config: Option<PathBuf>,
    #[command(flatten)]
    pub bm25: Bm25Args,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub stories: PathBuf,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<commands::UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<sfx_core::Error>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_INTERNAL
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
