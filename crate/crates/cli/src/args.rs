//! Command-line surface. Every option can also come from a TOML file passed
//! with `--config`; flags given on the command line win. Option structs are
//! flat in TOML; unknown keys are rejected by [`crate::config::load_config`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "xmeter",
    version,
    about = "Functionally-grounded interpretability metrics"
)]
pub struct Cli {
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complexity, monotonicity, effective complexity and non-sensitivity of
    /// feature attributions.
    AttrEval(WithConfig<AttrEvalOptions>),
    /// Non-representativeness and diversity of prototype selectors.
    ExampleEval(WithConfig<ExampleEvalOptions>),
    /// Mutual information of feature extractors with the input and the target.
    Mi(WithConfig<MiOptions>),
}

#[derive(Debug, Args)]
pub struct WithConfig<T: Args> {
    /// TOML file with the same keys as the long options (underscored).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub options: T,
}

/// Where and how reports are written.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OutputOptions {
    /// Output directory (created if missing) [default: .]
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// json, csv or both [default: both]
    #[arg(long)]
    pub format: Option<String>,
}

/// Model and data sources shared by all commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SourceOptions {
    /// Built-in model: park, tree, softmax or token.
    #[arg(long)]
    pub model: Option<String>,
    /// Command line of an external model speaking the JSON-lines protocol.
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Seconds to wait for each external-model response [default: 30]
    #[arg(long)]
    pub model_timeout: Option<f64>,
    /// CSV dataset (header row, optional final `label` column).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Built-in dataset: synth, clustered or token.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Seed of built-in datasets and trained models [default: 0]
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Maximum depth of the `tree` model [default: 4]
    #[arg(long)]
    pub tree_depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct AttrEvalOptions {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceOptions,
    /// Explained point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub point: Option<Vec<f64>>,
    /// Explain this dataset row instead of --point.
    #[arg(long)]
    pub point_index: Option<usize>,
    /// JSON attribution file {"point":[..],"values":[..],"method":".."} to judge.
    #[arg(long)]
    pub attribution: Option<PathBuf>,
    /// Attribution methods [default: saliency,inpxgrad,intgrad,random]
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Integrated-gradients steps [default: 64]
    #[arg(long)]
    pub ig_steps: Option<usize>,
    /// Effective-complexity tolerance [default: 0.01]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Monte Carlo samples per expectation [default: 5000]
    #[arg(long)]
    pub n_mc: Option<usize>,
    /// Seed for Monte Carlo sampling and random attributions [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// zero-one, squared-error or cross-entropy [default: squared-error for
    /// scalar models, zero-one for classifiers]
    #[arg(long)]
    pub loss: Option<String>,
    /// Expected loss at or below which a feature counts as irrelevant [default: 1e-6]
    #[arg(long)]
    pub zero_tolerance: Option<f64>,
    /// uniform or empirical [default: empirical with a dataset, else the
    /// model's domain]
    #[arg(long)]
    pub distribution: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub uniform_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub uniform_hi: Option<f64>,
    /// Perturbations per seed for the perturbation test at k = EC (off when unset).
    #[arg(long)]
    pub perturbations: Option<usize>,
    /// Number of perturbation-test seeds [default: 5]
    #[arg(long)]
    pub pt_seeds: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOptions,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ExampleEvalOptions {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceOptions,
    /// Selectors [default: kmedoids,mmd,protodash]
    #[arg(long, value_delimiter = ',')]
    pub selectors: Option<Vec<String>>,
    /// Prototypes per class [default: 6]
    #[arg(long)]
    pub n: Option<usize>,
    /// Also sweep n = 1..=SWEEP and write the curve.
    #[arg(long)]
    pub sweep: Option<usize>,
    /// euclidean or manhattan [default: euclidean]
    #[arg(long)]
    pub distance: Option<String>,
    /// ordered or unordered [default: ordered]
    #[arg(long)]
    pub pairs: Option<String>,
    /// RBF bandwidth [default: median heuristic]
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Loss for non-representativeness [default: zero-one]
    #[arg(long)]
    pub loss: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOptions,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MiOptions {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: SourceOptions,
    /// Runs to average over [default: 50]
    #[arg(long)]
    pub runs: Option<usize>,
    /// Neighbours of the k-NN estimators [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Columns overwritten by the random extractor [default: 3]
    #[arg(long)]
    pub n_replaced: Option<usize>,
    /// Value written by the random extractor [default: -10]
    #[arg(long, allow_hyphen_values = true)]
    pub ood_value: Option<f64>,
    /// Depth of the per-feature entropy trees [default: 1]
    #[arg(long)]
    pub discretizer_depth: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOptions,
}
