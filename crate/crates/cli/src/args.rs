use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "quizforge",
    version,
    about = "Build quiz datasets from Turkish educational texts and evaluate quiz generators",
    propagate_version = true
)]
pub struct Cli {
    /// Pipeline config file (TOML); command-line flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print a machine-readable JSON summary instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus preparation.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Subject and token-length statistics of a cleaned corpus.
    Stats(StatsArgs),
    /// Generate quiz sets for every corpus document.
    Generate(GenerateArgs),
    /// Rewrite quiz sets into another format.
    #[command(subcommand)]
    Transform(TransformCommand),
    /// ROUGE-score quiz sets against their source documents and apply the quality gate.
    Score(ScoreArgs),
    /// Instruction dataset construction.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Model evaluation and comparison reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Human review of generated items.
    #[command(subcommand)]
    Review(ReviewCommand),
    /// Local stand-in for a chat-completions endpoint.
    #[command(subcommand)]
    Mock(MockCommand),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Strip markup and noise from raw records and keep documents within the token bounds.
    Clean(CleanArgs),
}

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Raw records: a JSONL file or a directory of .jsonl/.json/.txt/.html files.
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Cleaned documents (JSONL). Defaults to paths.corpus from the config.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write rejected records with their reasons (JSONL).
    #[arg(long, value_name = "FILE")]
    pub rejects: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub min_tokens: Option<u64>,
    #[arg(long, value_name = "N")]
    pub max_tokens: Option<u64>,
    /// unicode-words or whitespace.
    #[arg(long, value_name = "KIND")]
    pub tokenizer: Option<String>,
    /// Lines shorter than this many tokens are dropped as fragments.
    #[arg(long, value_name = "N")]
    pub fragment_min_tokens: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Cleaned documents (JSONL). Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Width of the token-length histogram buckets.
    #[arg(long, value_name = "N", default_value_t = 250)]
    pub bucket_width: u64,
    /// Write the statistics as JSON.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Model name sent with each request.
    #[arg(long, value_name = "NAME")]
    pub model: Option<String>,
    /// Chat-completions URL, API base URL, or mock://quiz, mock://echo, mock://garbage.
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key ("" for none).
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    #[arg(long, value_name = "T")]
    pub temperature: Option<f64>,
    #[arg(long, value_name = "N")]
    pub max_output_tokens: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct BatchArgs {
    /// Requests in flight at once.
    #[arg(long, value_name = "N")]
    pub concurrency: Option<usize>,
    /// Request rate limit.
    #[arg(long, value_name = "N")]
    pub rpm: Option<u32>,
    /// Retries per document after the first request.
    #[arg(long, value_name = "N")]
    pub max_retries: Option<u32>,
    /// Base of the exponential backoff, in seconds.
    #[arg(long, value_name = "SECS")]
    pub backoff_base: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Cleaned documents (JSONL). Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Output directory. Defaults to <paths.outputs>/generate.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Directory of prompt templates; the built-in set is used otherwise.
    #[arg(long, value_name = "DIR")]
    pub template_dir: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub batch: BatchArgs,
    /// mcq or saq.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<String>,
    #[arg(long, value_name = "N")]
    pub num_questions: Option<u32>,
    /// Options per MCQ question (2 to 5).
    #[arg(long, value_name = "N")]
    pub options: Option<u8>,
    /// Generation time recorded in provenance (RFC 3339). Defaults to
    /// SOURCE_DATE_EPOCH when set, else the current time.
    #[arg(long, value_name = "RFC3339")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum TransformCommand {
    /// Turn MCQ sets into SAQ sets: same stems, the correct option's text as the answer.
    McqToSaq(McqToSaqArgs),
}

#[derive(Debug, Args)]
pub struct McqToSaqArgs {
    /// MCQ quiz sets (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// SAQ quiz sets (JSONL).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Write the transform summary as JSON.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregateArg {
    PerItem,
    Mean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CandidateArg {
    StemWithOptions,
    StemOnly,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Quiz sets (JSONL).
    #[arg(long, value_name = "FILE")]
    pub quiz: Option<PathBuf>,
    /// Cleaned documents (JSONL). Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Lowest admitted ROUGE-L F1, in [0, 1].
    #[arg(long, value_name = "F1")]
    pub gate_min: Option<f64>,
    /// Highest admitted ROUGE-L F1; higher values suggest answer leakage.
    #[arg(long, value_name = "F1")]
    pub gate_max: Option<f64>,
    /// Whether a set passes on its mean or only when every item passes.
    #[arg(long, value_enum)]
    pub aggregate: Option<AggregateArg>,
    /// Which item text is compared with the source.
    #[arg(long, value_enum)]
    pub candidate: Option<CandidateArg>,
    /// Per-set scores and verdicts (JSONL).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Quiz sets that pass the gate (JSONL).
    #[arg(long, value_name = "FILE")]
    pub passed: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Turn quiz sets into instruction records.
    Build(BuildArgs),
    /// Seeded document-level train/eval split.
    Split(SplitArgs),
    /// Write the fine-tuning configuration for a model.
    EmitConfig(EmitConfigArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Quiz sets (JSONL); repeat for several files.
    #[arg(long, value_name = "FILE", required = true)]
    pub quiz: Vec<PathBuf>,
    /// Cleaned documents (JSONL). Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Instruction records (JSONL). Defaults to <paths.outputs>/records.jsonl.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// File with the instruction template; a built-in Turkish one otherwise.
    #[arg(long, value_name = "FILE")]
    pub instruction: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Instruction records (JSONL). Defaults to <paths.outputs>/records.jsonl.
    #[arg(long, value_name = "FILE")]
    pub records: Option<PathBuf>,
    /// Documents in the training side.
    #[arg(long, value_name = "N")]
    pub train: Option<usize>,
    /// Documents in the evaluation side.
    #[arg(long, value_name = "N")]
    pub eval: Option<usize>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory for train.jsonl, eval.jsonl and manifest.json.
    /// Defaults to <paths.outputs>/dataset.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmitConfigArgs {
    /// gpt35-turbo, llama2-chat-7b or llama2-chat-13b.
    #[arg(long, value_name = "KIND")]
    pub model_kind: String,
    /// TOML file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Generate for every eval record and score against the reference output.
    Run(EvalRunArgs),
    /// Compare evaluation runs in one table.
    Report(EvalReportArgs),
}

#[derive(Debug, Args)]
pub struct EvalRunArgs {
    /// Eval records (JSONL).
    #[arg(long, value_name = "FILE")]
    pub eval_set: PathBuf,
    /// mcq or saq; records of the other format are skipped.
    #[arg(long, value_name = "FORMAT")]
    pub format: String,
    /// Run label shown in reports, for example "finetuned".
    #[arg(long, value_name = "TEXT")]
    pub label: String,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub batch: BatchArgs,
    /// Evaluation result (JSON).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalReportArgs {
    /// Evaluation results or run summaries (JSON); repeat for several runs.
    #[arg(long = "in", value_name = "FILE", required = true)]
    pub inputs: Vec<PathBuf>,
    /// text, json, markdown or html.
    #[arg(long = "format", value_name = "FORMAT", default_value = "text")]
    pub report_format: String,
    /// Write the table here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReviewCommand {
    /// Serve the review API (and UI files, if given) until interrupted.
    Serve(ServeArgs),
    /// Seeded sample of items for review.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Quiz sets to review (JSONL).
    #[arg(long, value_name = "FILE")]
    pub quiz: PathBuf,
    /// Cleaned documents for source context. Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Annotation log (JSONL), created if missing.
    #[arg(long, value_name = "FILE")]
    pub store: PathBuf,
    #[arg(long, value_name = "ADDR", default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Port to listen on (0 picks a free one).
    #[arg(long, value_name = "PORT", default_value_t = 8080)]
    pub port: u16,
    /// Built review UI to serve at /.
    #[arg(long, value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Quiz sets (JSONL).
    #[arg(long, value_name = "FILE")]
    pub quiz: PathBuf,
    /// Cleaned documents, used for subjects. Defaults to paths.corpus.
    #[arg(long, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Number of items.
    #[arg(long, value_name = "N")]
    pub n: usize,
    #[arg(long, value_name = "N")]
    pub seed: u64,
    /// Spread the sample evenly over subjects.
    #[arg(long)]
    pub stratify: bool,
    /// Sampled items as quiz sets (JSONL).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum MockCommand {
    /// Serve a deterministic chat-completions endpoint until interrupted.
    Serve(MockServeArgs),
}

#[derive(Debug, Args)]
pub struct MockServeArgs {
    #[arg(long, value_name = "ADDR", default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, value_name = "PORT", default_value_t = 8090)]
    pub port: u16,
    /// quiz, echo or garbage.
    #[arg(long, value_name = "MODE", default_value = "quiz")]
    pub mode: String,
    /// mcq or saq.
    #[arg(long, value_name = "FORMAT")]
    pub format: Option<String>,
    #[arg(long, value_name = "N")]
    pub num_questions: Option<u32>,
    #[arg(long, value_name = "N")]
    pub options: Option<u8>,
}
