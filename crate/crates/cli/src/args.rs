use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chorale_graph::chord2vec::ChordMethod;
use chorale_graph::classify::LabelCarry;
use chorale_graph::corpus::Selector;
use chorale_graph::embedding::Method;
use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_all<T: fmt::Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

#[derive(Debug, Parser)]
#[command(name = "chorale", version, about = "Chorale similarity graphs, node embeddings and mode classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus
    Synth(SynthArgs),
    /// Validate a corpus and summarize it
    Ingest(IngestArgs),
    /// Train chord-token embeddings
    Chords(ChordsArgs),
    /// Build one similarity graph per threshold
    BuildGraph(BuildGraphArgs),
    /// Sample biased random walks over a graph
    Walks(WalksArgs),
    /// Train node embeddings
    Train(TrainArgs),
    /// List the nodes most similar to a node
    Query(QueryArgs),
    /// Cross-model agreement study
    Agree(AgreeArgs),
    /// One collective-classification trial
    Classify(ClassifyArgs),
    /// Missing-label experiment grid over several graphs
    Experiment(ExperimentArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Ingest(_) => "ingest",
            Command::Chords(_) => "chords",
            Command::BuildGraph(_) => "build-graph",
            Command::Walks(_) => "walks",
            Command::Train(_) => "train",
            Command::Query(_) => "query",
            Command::Agree(_) => "agree",
            Command::Classify(_) => "classify",
            Command::Experiment(_) => "experiment",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// key=value file supplying values for any flag; explicit flags win
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Master seed; every stage derives its own stream from it
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Provenance log to append to [default: manifest.jsonl beside the output]
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 383)]
    pub records: usize,
    #[arg(long, default_value_t = 8)]
    pub families: usize,
    #[arg(long, default_value_t = 0.6)]
    pub major_fraction: f64,
    /// Per-chord probability of departing from the family opening
    #[arg(long, default_value_t = 0.2)]
    pub mutation: f64,
    #[arg(long, default_value_t = 24)]
    pub min_len: usize,
    #[arg(long, default_value_t = 48)]
    pub max_len: usize,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct IngestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Also write the summary as JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChordParams {
    #[arg(long, default_value = "cbow")]
    #[serde(serialize_with = "display")]
    pub chord_method: ChordMethod,
    #[arg(long, default_value_t = 32)]
    pub chord_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub chord_window: usize,
    #[arg(long, default_value_t = 50)]
    pub chord_epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub chord_lr: f64,
    #[arg(long, default_value_t = 0.0001)]
    pub chord_lr_min: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ChordsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub chord: ChordParams,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[command(group = clap::ArgGroup::new("threshold").required(true).args(["xi", "target_edges"]))]
pub struct BuildGraphArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub chords: PathBuf,
    /// intro:N, cadence or intro+cadence:N
    #[arg(long, default_value = "intro:6")]
    #[serde(serialize_with = "display")]
    pub selector: Selector,
    /// Comma-separated thresholds; edges need S > xi (-inf gives the complete graph)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub xi: Vec<f64>,
    /// Comma-separated edge counts; xi is chosen to keep that many strongest pairs
    #[arg(long, value_delimiter = ',')]
    pub target_edges: Vec<usize>,
    /// Receives graph_1.txt, graph_2.txt, ... in threshold order
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkParams {
    #[arg(long, default_value_t = 10)]
    pub walks_per_node: usize,
    #[arg(long, default_value_t = 10)]
    pub walk_length: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PqParams {
    /// Common-neighbour bias is 1/p
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Outward bias is 1/q
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct WalksArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub pq: PqParams,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainParams {
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    /// Final learning rate [default: lr / 100]
    #[arg(long)]
    pub lr_min: Option<f64>,
    /// Negatives per positive pair (sgns only)
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: PathBuf,
    /// Walk file from `walks`; sampled afresh when absent
    #[arg(long)]
    pub walks: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// sgns, sg or cbow
    #[arg(long, default_value = "sgns")]
    #[serde(serialize_with = "display")]
    pub method: Method,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub pq: PqParams,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct QueryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Node id as it appears in the corpus
    #[arg(long)]
    pub node: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Also write the ranking to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A `(p, q)` grid point written `p:q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint(pub f64, pub f64);

impl FromStr for GridPoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (p, q) = s
            .split_once(':')
            .ok_or_else(|| format!("expected p:q, got {s:?}"))?;
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        Ok(GridPoint(num(p)?, num(q)?))
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.0, self.1)
    }
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct AgreeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub chords: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    /// Must match the selector the graph was built with
    #[arg(long, default_value = "intro:6")]
    #[serde(serialize_with = "display")]
    pub selector: Selector,
    /// Comma-separated p:q points
    #[arg(long, value_delimiter = ',', default_value = "1:1,0.7:1,1:0.7")]
    #[serde(serialize_with = "display_all")]
    pub grid: Vec<GridPoint>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainParams,
    /// Per-(p, q), per-metric CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyParams {
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    /// Values strictly above become class 1
    #[arg(long, default_value_t = 0.5)]
    pub class1_thr: f64,
    /// Values strictly below become class 0
    #[arg(long, default_value_t = 0.5)]
    pub class0_thr: f64,
    /// soft: continuous values propagate; hard: thresholded labels propagate
    #[arg(long, default_value = "soft")]
    #[serde(serialize_with = "display")]
    pub carry: LabelCarry,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub missing_rate: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub classify: ClassifyParams,
    /// Accuracy per iteration as CSV
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
pub struct ExperimentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Comma-separated graph files
    #[arg(long, value_delimiter = ',', required = true)]
    pub graphs: Vec<PathBuf>,
    /// Comma-separated report ids [default: graph file stems]
    #[arg(long, value_delimiter = ',')]
    pub graph_ids: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
    pub rates: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    pub repeats: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub classify: ClassifyParams,
    /// Per-cell, per-iteration summary CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Per-repeat accuracy curves [default: <out stem>_curves.csv]
    #[arg(long)]
    pub curves: Option<PathBuf>,
}
