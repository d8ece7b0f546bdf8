use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use storyline_core::eval::QueryMode;
use storyline_core::rankers::System;

#[derive(Debug, Parser)]
#[command(name = "storyline", version, about = "Build, run and evaluate past-news retrieval for incomplete narratives")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate raw article records and write a normalized corpus.
    Ingest(IngestArgs),
    /// Keep only articles from the allowed sections.
    Filter(FilterArgs),
    /// Extract queries and qrels from a corpus's hyperlinks.
    BuildDataset(BuildDatasetArgs),
    /// Split queries chronologically into train/dev/test.
    Split(SplitArgs),
    /// Build and save a BM25 index.
    Index(IndexArgs),
    /// Print index statistics, or dataset statistics per split.
    Stats(StatsArgs),
    /// Embed articles as mean word vectors.
    Embed(EmbedArgs),
    /// Run a retrieval experiment described by a config file.
    Run(RunArgs),
    /// Score a TREC run against qrels.
    Eval(EvalArgs),
    /// Per-bin MRR breakdowns of one or more runs.
    Analyze(AnalyzeArgs),
    /// Generate the synthetic benchmark corpus and vectors.
    Synth(SynthArgs),
    /// Serve interactive search over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Abort on the first invalid record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
    /// Re-split paragraphs into sentences with the built-in splitter.
    #[arg(long)]
    pub split_sentences: bool,
    /// Write rejected records (line and reason) here as TSV.
    #[arg(long)]
    pub rejects: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Comma-separated allowed sections; the news-domain list by default.
    #[arg(long, value_delimiter = ',')]
    pub sections: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub queries_out: PathBuf,
    #[arg(long)]
    pub qrels_out: PathBuf,
    /// Skip-reason counts as TSV.
    #[arg(long)]
    pub skips_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub queries: PathBuf,
    /// Train, dev and test fractions.
    #[arg(long, default_value = "0.9,0.05,0.05")]
    pub fractions: String,
    /// Receives `{train,dev,test}.jsonl` and matching `.qrels` files.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.4)]
    pub b: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["index", "queries"]))]
pub struct StatsArgs {
    /// Saved index to describe.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Queries to describe per chronological split (needs --corpus).
    #[arg(long, requires = "corpus")]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "0.9,0.05,0.05")]
    pub fractions: String,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word vectors: header `count dim`, then a word and dim floats per line.
    #[arg(long)]
    pub word_vectors: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long, env = "STORYLINE_EXPERIMENT")]
    pub config: PathBuf,
    /// Override the config's system.
    #[arg(long)]
    pub system: Option<System>,
    /// Override the config's query mode.
    #[arg(long)]
    pub mode: Option<QueryMode>,
    #[arg(long)]
    pub run_out: Option<PathBuf>,
    #[arg(long)]
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scope {
    /// Every judged query; queries missing from the run score 0.
    All,
    /// Only the queries present in the run.
    Run,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Baseline run for paired t-tests.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Scope::All)]
    pub scope: Scope,
    /// Full per-query report as TSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimensionArg {
    /// Jaccard similarity of event+context and the relevant article.
    JaccardQ,
    /// Jaccard similarity of the context alone and the relevant article.
    JaccardC,
    /// Days between the query and the relevant article.
    Daydiff,
    /// Mean IDF of the query's entities.
    EntityIdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntitySourceArg {
    Auto,
    Annotations,
    Heuristic,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub dimension: DimensionArg,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Run files to compare; repeat for several systems.
    #[arg(long = "run", required = true)]
    pub runs: Vec<PathBuf>,
    /// Comma-separated bin edges replacing the dimension's defaults.
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = EntitySourceArg::Auto)]
    pub entities: EntitySourceArg,
    /// Entity-IDF over event entities only.
    #[arg(long)]
    pub event_only: bool,
    /// Table output; stdout when no output is given.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
    /// Plot-ready JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Grouped bar chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Receives corpus.jsonl, articles.vec, queries.vec and experiment.toml.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub storylines: Option<usize>,
    #[arg(long)]
    pub articles_per_storyline: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config (TOML).
    #[arg(long, env = "STORYLINE_CONFIG", required_unless_present = "corpus")]
    pub config: Option<PathBuf>,
    /// Serve this corpus with BM25-only systems instead of a config.
    #[arg(long, conflicts_with = "config")]
    pub corpus: Option<PathBuf>,
    #[arg(long, env = "STORYLINE_HOST", default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "STORYLINE_PORT", default_value_t = 8080)]
    pub port: u16,
}
