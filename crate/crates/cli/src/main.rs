use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdprop::{SpanPolicy, SrsRelationWeighting, VectorFormat};

mod commands;
mod config;

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "crowdprop", version, about = "Crowd aggregation, label propagation and evaluation for relation corpora")]
struct Cli {
    /// TOML file with defaults for any flag; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute worker/sentence/relation quality and sentence-relation scores.
    Aggregate(AggregateArgs),
    /// Relabel a DS corpus from its nearest crowd-annotated sentences.
    Propagate(PropagateArgs),
    /// Score predictions against crowd gold (P/R curve, AUC, cosine).
    Evaluate(EvaluateArgs),
    /// Per-relation ratio of DS positives the crowd scores below threshold.
    FpRatio(FpRatioArgs),
    /// Vocabulary coverage of corpora against a word-vector file.
    EmbedStats(EmbedStatsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Text,
    Binary,
}

impl From<FormatArg> for VectorFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => VectorFormat::Text,
            FormatArg::Binary => VectorFormat::Binary,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SpanArg {
    BetweenTerms,
    WholeSentence,
}

impl From<SpanArg> for SpanPolicy {
    fn from(s: SpanArg) -> Self {
        match s {
            SpanArg::BetweenTerms => SpanPolicy::BetweenTerms,
            SpanArg::WholeSentence => SpanPolicy::WholeSentence,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeightingArg {
    Off,
    PerChoice,
}

impl From<WeightingArg> for SrsRelationWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Off => SrsRelationWeighting::Off,
            WeightingArg::PerChoice => SrsRelationWeighting::PerChoice,
        }
    }
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    /// Annotation CSV (`worker_id,sentence_id,choices`).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Relation inventory, one identifier per line, `none` last.
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Output quality-scores JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub srs_relation_weighting: Option<WeightingArg>,
    /// Also write the unweighted fraction of workers per relation.
    #[arg(long)]
    pub report_unweighted: bool,
}

#[derive(Args, Debug)]
pub struct PropagateArgs {
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Word vectors (text or binary format).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Defaults to `binary` for `.bin` files, `text` otherwise.
    #[arg(long, value_enum)]
    pub embeddings_format: Option<FormatArg>,
    /// Crowd-annotated corpus (JSONL).
    #[arg(long)]
    pub crowd: Option<PathBuf>,
    /// Quality JSON from `aggregate`; without it the crowd corpus must carry `scores`.
    #[arg(long)]
    pub quality: Option<PathBuf>,
    /// Distant-supervision corpus (JSONL).
    #[arg(long)]
    pub ds: Option<PathBuf>,
    /// Output JSONL of propagation results.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run report JSON; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub span_policy: Option<SpanArg>,
    /// Blend with the raw (possibly negative) cosine instead of max(0, cos).
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Prediction JSONL (`{id, scores}` per line).
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Gold JSONL in the prediction format.
    #[arg(long, conflicts_with = "quality")]
    pub gold: Option<PathBuf>,
    /// Gold sentence-relation scores from an `aggregate` quality JSON.
    #[arg(long)]
    pub quality: Option<PathBuf>,
    /// Directory for report.json, pr_curve.csv and cosine.csv.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub gold_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FpRatioArgs {
    #[arg(long)]
    pub inventory: Option<PathBuf>,
    /// Crowd corpus with DS seed labels (JSONL).
    #[arg(long)]
    pub crowd: Option<PathBuf>,
    /// Quality JSON; without it the crowd corpus must carry `scores`.
    #[arg(long)]
    pub quality: Option<PathBuf>,
    /// Output CSV (`relation,fp_ratio`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub gold_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EmbedStatsArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub embeddings_format: Option<FormatArg>,
    /// Corpus JSONL to measure; repeatable.
    #[arg(long = "corpus", required = true)]
    pub corpora: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub span_policy: Option<SpanArg>,
    /// Output JSON; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<crowdprop::Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 1;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut file = RunConfig::load(cli.config.as_deref())?;
    if cli.threads.is_some() {
        file.threads = cli.threads;
    }
    file.validate()?;

    let dispatch = || match &cli.command {
        Command::Aggregate(args) => commands::aggregate(args, &file),
        Command::Propagate(args) => commands::propagate(args, &file),
        Command::Evaluate(args) => commands::evaluate(args, &file),
        Command::FpRatio(args) => commands::fp_ratio(args, &file),
        Command::EmbedStats(args) => commands::embed_stats(args, &file),
    };

    #[cfg(feature = "parallel")]
    if let Some(threads) = file.threads {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        return pool.install(dispatch);
    }
    dispatch()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
