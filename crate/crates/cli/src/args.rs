//! Command-line flags.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use memesim_core::corpus::{Attribute, Schema};
use memesim_core::embedding::AlignPolicy;
use memesim_core::similarity::AggregationMode;

#[derive(Debug, Parser)]
#[command(name = "memesim", version, about = "Group memes by joint image/text embedding similarity and analyse the groups")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Run directory for artifacts. MEMESIM_OUT, when set, takes precedence.
    #[arg(long, global = true, default_value = "memesim-out")]
    pub out: PathBuf,

    /// Also write the primary artifact to standard output.
    #[arg(long, global = true)]
    pub stdout: bool,

    /// Worker threads for the similarity kernel (0 = all available cores).
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and report label distributions.
    Ingest(IngestArgs),
    /// Compute the thresholded edge list from image and text embeddings.
    Similarity(SimilarityArgs),
    /// Group memes into connected components of an edge list.
    Group(GroupArgs),
    /// Annotate meme texts with emotions from a sidecar or the lexicon.
    Emotions(EmotionsArgs),
    /// Emotion distribution, chi-square tests and word frequencies.
    Analyze(AnalyzeArgs),
    /// Agreement rates from a survey response log.
    Evaluate(EvaluateArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Ingest, similarity, grouping, emotions and analysis in one run.
    Pipeline(PipelineArgs),
    /// Show the four similarity scores between two memes.
    Explain(ExplainArgs),
    /// Write a seeded synthetic corpus with embeddings and a survey log.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CorpusArgs {
    /// Corpus CSV.
    #[arg(long)]
    pub corpus: PathBuf,

    /// Corpus layout: memotion or reddit.
    #[arg(long, default_value = "memotion")]
    #[serde(serialize_with = "display")]
    pub schema: Schema,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbeddingArgs {
    /// Image embeddings (binary with a `.ids` manifest alongside, or JSONL).
    #[arg(long = "img-emb")]
    pub img_emb: PathBuf,

    /// Text embeddings (binary with a `.ids` manifest alongside, or JSONL).
    #[arg(long = "txt-emb")]
    pub txt_emb: PathBuf,

    /// How corpus memes missing an embedding are handled: strict or intersect.
    #[arg(long, default_value = "intersect")]
    #[serde(serialize_with = "debug_lower")]
    pub align: AlignPolicy,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoringArgs {
    /// Similarity threshold; pairs scoring at or above it are linked.
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    pub threshold: f64,

    /// Aggregation of the four scores: mean, min, max or weighted=w_ii,w_tt,w_it,w_ti.
    #[arg(long, default_value = "mean")]
    #[serde(serialize_with = "display")]
    pub agg: AggregationMode,

    /// Rows per kernel tile.
    #[arg(long, default_value_t = 256)]
    pub tile: usize,
}

/// Where emotion labels come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmotionSource {
    Lexicon,
    Sidecar(PathBuf),
}

impl FromStr for EmotionSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lexicon" => Ok(EmotionSource::Lexicon),
            _ => match s.strip_prefix("sidecar:") {
                Some(p) if !p.is_empty() => Ok(EmotionSource::Sidecar(PathBuf::from(p))),
                _ => Err(format!("expected `lexicon` or `sidecar:PATH`, got `{s}`")),
            },
        }
    }
}

impl std::fmt::Display for EmotionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EmotionSource::Lexicon => f.write_str("lexicon"),
            EmotionSource::Sidecar(p) => write!(f, "sidecar:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmotionArgs {
    /// Emotion source: `lexicon` or `sidecar:PATH`.
    #[arg(long, default_value = "lexicon")]
    #[serde(serialize_with = "display")]
    pub emotions: EmotionSource,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalysisArgs {
    /// Attribute to test against emotion (repeatable; default all five).
    #[arg(long = "attribute")]
    #[serde(serialize_with = "display_list")]
    pub attributes: Vec<Attribute>,

    /// Apply Yates' continuity correction to 2×2 tables.
    #[arg(long)]
    pub yates: bool,

    /// Number of tokens kept per frequency list.
    #[arg(long = "top-k", default_value_t = 50)]
    pub top_k: usize,

    /// Stopword file, one word per line (default: the bundled English list).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimilarityArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GroupArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Edge list CSV from `similarity`.
    #[arg(long)]
    pub edges: PathBuf,

    /// Report how many internal pairs of each group are direct edges.
    #[arg(long = "clique-check")]
    pub clique_check: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmotionsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub emotions: EmotionArgs,

    /// Groups JSON; adds each group's dominant emotion.
    #[arg(long)]
    pub groups: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub emotions: EmotionArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Survey response log (JSONL).
    #[arg(long)]
    pub responses: PathBuf,

    /// Groups JSON; with --corpus enables emotion agreement.
    #[arg(long)]
    pub groups: Option<PathBuf>,

    /// Corpus CSV used for emotion agreement.
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    /// Corpus layout: memotion or reddit.
    #[arg(long, default_value = "memotion")]
    #[serde(serialize_with = "display")]
    pub schema: Schema,

    #[command(flatten)]
    pub emotions: EmotionArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Groups JSON.
    #[arg(long)]
    pub groups: PathBuf,

    /// Emotion source: `lexicon` or `sidecar:PATH`.
    #[arg(long, default_value = "lexicon")]
    pub emotions: EmotionSource,

    /// Survey response log (JSONL), created if missing.
    #[arg(long, default_value = "responses.jsonl")]
    pub responses: PathBuf,

    /// Directory of meme images, looked up by meme id.
    #[arg(long = "image-dir")]
    pub image_dir: Option<PathBuf>,

    /// Directory of the survey front-end bundle, served at `/`.
    #[arg(long = "static-dir")]
    pub static_dir: Option<PathBuf>,

    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,

    /// Reject all mutating requests.
    #[arg(long = "read-only")]
    pub read_only: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    #[command(flatten)]
    pub emotions: EmotionArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,

    /// Report how many internal pairs of each group are direct edges.
    #[arg(long = "clique-check")]
    pub clique_check: bool,

    /// Survey response log; adds agreement reports to the run.
    #[arg(long)]
    pub responses: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,

    /// Similarity threshold for the verdict.
    #[arg(long, default_value_t = 0.8, allow_negative_numbers = true)]
    pub threshold: f64,

    /// Aggregation of the four scores.
    #[arg(long, default_value = "mean")]
    #[serde(serialize_with = "display")]
    pub agg: AggregationMode,

    /// First meme id.
    pub id_a: String,
    /// Second meme id.
    pub id_b: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Number of memes.
    #[arg(long, default_value_t = 100)]
    pub memes: usize,

    /// Embedding dimension.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,

    /// Planted clusters.
    #[arg(long, default_value_t = 15)]
    pub clusters: usize,

    /// Memes per planted cluster.
    #[arg(long = "cluster-size", default_value_t = 4)]
    pub cluster_size: usize,

    /// Per-coordinate noise around each cluster centre.
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,

    /// Random seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_list<T: std::fmt::Display, S: serde::Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

fn debug_lower<T: std::fmt::Debug, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:?}").to_lowercase())
}
