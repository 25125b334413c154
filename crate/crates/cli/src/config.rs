//! Run configuration: TOML file, command-line overrides, dataset loading.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sgcl_core::augmentation::AugmentationKind;
use sgcl_core::graph::{parse_interactions, split_train_test, ParseConfig, Separator};
use sgcl_core::losses::ContrastiveObjective;
use sgcl_core::synth::{generate_block_graph, SynthConfig};
use sgcl_core::trainer::TrainConfig;
use sgcl_core::InteractionGraph;

/// Where the interaction graph comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Delimiter-separated text file at `data.path`.
    File,
    /// Deterministic block-model graph from the `[synth]` section.
    Synth,
}

/// The `[data]` section: input location, parsing, and the train/test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSection {
    pub source: DataSource,
    pub path: Option<PathBuf>,
    /// "whitespace", "tab", "comma", or any single character.
    pub separator: String,
    /// Keep only interactions with rating at or above this value.
    pub rating_threshold: Option<f64>,
    pub test_ratio: f64,
    pub split_seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: DataSource::Synth,
            path: None,
            separator: "whitespace".into(),
            rating_threshold: None,
            test_ratio: 0.2,
            split_seed: 11,
        }
    }
}

/// The `[output]` section.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("runs/latest"),
        }
    }
}

/// The `[fetch]` section: where the MovieLens-100K archive lives and the
/// digest it must match. The checksum is deliberately not hardcoded: pin it
/// here or pass `--sha256`, and fetching refuses to run without a pin.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchSection {
    pub url: String,
    pub cache_dir: PathBuf,
    pub sha256: Option<String>,
    /// Archive member holding the ratings, extracted into `cache_dir`.
    pub member: String,
}

impl Default for FetchSection {
    fn default() -> Self {
        FetchSection {
            url: "https://files.grouplens.org/datasets/movielens/ml-100k.zip".into(),
            cache_dir: PathBuf::from("data/ml-100k"),
            sha256: None,
            member: "ml-100k/u.data".into(),
        }
    }
}

/// The `[sweep]` section: values to grid over. Empty lists keep the base
/// value from `[train]`, so an empty section is a single-point sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    pub p: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub tau: Vec<f64>,
    pub dim: Vec<usize>,
    pub layers: Vec<usize>,
    pub rate: Vec<f64>,
}

/// Effective configuration of one run: config file merged with CLI flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub output: OutputSection,
    pub fetch: FetchSection,
    pub sweep: SweepSection,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }

    /// Rejects out-of-range values before any computation. `epochs = 0` is
    /// allowed here; the train command treats it as "write initial state".
    pub fn validate(&self) -> Result<()> {
        if self.data.source == DataSource::File && self.data.path.is_none() {
            bail!("data.path is required when data.source = \"file\"");
        }
        if !(0.0..1.0).contains(&self.data.test_ratio) {
            bail!(
                "data.test_ratio must be in [0, 1), got {}",
                self.data.test_ratio
            );
        }
        parse_separator(&self.data.separator)?;
        let mut train = self.train.clone();
        if train.epochs == 0 {
            train.epochs = 1;
        }
        train.validate().context("in the [train] section")?;
        self.synth.validate().context("in the [synth] section")?;
        Ok(())
    }
}

pub fn parse_separator(name: &str) -> Result<Separator> {
    match name {
        "whitespace" => Ok(Separator::Whitespace),
        "tab" => Ok(Separator::Char('\t')),
        "comma" => Ok(Separator::Char(',')),
        other => {
            let mut chars = other.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(Separator::Char(c)),
                _ => bail!(
                    "data.separator must be \"whitespace\", \"tab\", \"comma\", \
                     or a single character, got {other:?}"
                ),
            }
        }
    }
}

pub fn parse_objective(name: &str) -> Result<ContrastiveObjective> {
    match name {
        "none" => Ok(ContrastiveObjective::None),
        "infonce" => Ok(ContrastiveObjective::InfoNce),
        "scl" => Ok(ContrastiveObjective::Scl),
        other => bail!("objective must be \"none\", \"infonce\", or \"scl\", got {other:?}"),
    }
}

pub fn parse_augment_kind(name: &str) -> Result<AugmentationKind> {
    match name {
        "edge_dropout" => Ok(AugmentationKind::EdgeDropout),
        "node_dropout" => Ok(AugmentationKind::NodeDropout),
        "random_walk" => Ok(AugmentationKind::RandomWalk),
        other => bail!(
            "augment kind must be \"edge_dropout\", \"node_dropout\", or \
             \"random_walk\", got {other:?}"
        ),
    }
}

/// Flags shared by the experiment subcommands; every field overrides the
/// matching config value when present.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// TOML config file; flags below override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Interaction file; implies a file data source.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Use the synthetic block-model graph from the [synth] section.
    #[arg(long)]
    pub synth: bool,
    /// Field separator: whitespace, tab, comma, or one character.
    #[arg(long)]
    pub separator: Option<String>,
    /// Keep interactions with rating at or above this value.
    #[arg(long)]
    pub rating_threshold: Option<f64>,
    /// Fraction of each user's history held out for testing.
    #[arg(long)]
    pub test_ratio: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Output directory for run artifacts.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Embedding dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Propagation depth.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Contrastive objective: none, infonce, or scl.
    #[arg(long)]
    pub objective: Option<String>,
    /// Softmax temperature.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Negative-term weight of the symmetric loss.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Power of the symmetric loss.
    #[arg(long)]
    pub p: Option<f64>,
    /// Contrastive weight in the multi-task objective.
    #[arg(long)]
    pub beta: Option<f64>,
    /// L2 regularization strength.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// View generator: edge_dropout, node_dropout, or random_walk.
    #[arg(long)]
    pub augment_kind: Option<String>,
    /// View dropout rate.
    #[arg(long)]
    pub augment_rate: Option<f64>,
    /// Evaluate on the test split every N epochs (0 disables).
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Comma-separated ranking cutoffs.
    #[arg(long, value_delimiter = ',')]
    pub eval_ks: Option<Vec<usize>>,
    /// Early-stopping patience in evaluations.
    #[arg(long)]
    pub patience: Option<usize>,
}

impl Overrides {
    /// Loads the config file (if any) and applies every present flag.
    pub fn effective_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(path) = &self.data {
            cfg.data.source = DataSource::File;
            cfg.data.path = Some(path.clone());
        }
        if self.synth {
            cfg.data.source = DataSource::Synth;
        }
        if let Some(v) = &self.separator {
            cfg.data.separator = v.clone();
        }
        if let Some(v) = self.rating_threshold {
            cfg.data.rating_threshold = Some(v);
        }
        if let Some(v) = self.test_ratio {
            cfg.data.test_ratio = v;
        }
        if let Some(v) = self.split_seed {
            cfg.data.split_seed = v;
        }
        if let Some(v) = &self.out {
            cfg.output.dir = v.clone();
        }
        if let Some(v) = self.lr {
            cfg.train.lr = v;
        }
        if let Some(v) = self.batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.seed {
            cfg.train.seed = v;
        }
        if let Some(v) = self.dim {
            cfg.train.encoder.dim = v;
        }
        if let Some(v) = self.layers {
            cfg.train.encoder.layers = v;
        }
        if let Some(v) = &self.objective {
            cfg.train.loss.objective = parse_objective(v)?;
        }
        if let Some(v) = self.tau {
            cfg.train.loss.tau = v;
        }
        if let Some(v) = self.lambda {
            cfg.train.loss.lambda = v;
        }
        if let Some(v) = self.p {
            cfg.train.loss.p = v;
        }
        if let Some(v) = self.beta {
            cfg.train.loss.beta = v;
        }
        if let Some(v) = self.alpha {
            cfg.train.loss.alpha = v;
        }
        if let Some(v) = &self.augment_kind {
            cfg.train.augment.kind = parse_augment_kind(v)?;
        }
        if let Some(v) = self.augment_rate {
            cfg.train.augment.rate = v;
        }
        if let Some(v) = self.eval_every {
            cfg.train.eval_every = v;
        }
        if let Some(v) = &self.eval_ks {
            cfg.train.eval_ks = v.clone();
        }
        if let Some(v) = self.patience {
            cfg.train.patience = Some(v);
        }
        Ok(cfg)
    }
}

/// Builds the interaction graph named by the config.
pub fn load_dataset(cfg: &RunConfig) -> Result<InteractionGraph> {
    match cfg.data.source {
        DataSource::Synth => generate_block_graph(&cfg.synth).context("generating synthetic graph"),
        DataSource::File => {
            let path = cfg
                .data
                .path
                .as_ref()
                .expect("validated: file source has a path");
            let file = fs::File::open(path)
                .with_context(|| format!("opening dataset {}", path.display()))?;
            let parse_cfg = ParseConfig {
                separator: parse_separator(&cfg.data.separator)?,
                rating_threshold: cfg.data.rating_threshold,
            };
            parse_interactions(BufReader::new(file), &parse_cfg)
                .with_context(|| format!("parsing dataset {}", path.display()))
        }
    }
}

/// Dataset plus its train/test split.
pub fn load_split(cfg: &RunConfig) -> Result<(InteractionGraph, InteractionGraph)> {
    let g = load_dataset(cfg)?;
    let (train, test) = split_train_test(&g, cfg.data.test_ratio, cfg.data.split_seed)?;
    Ok((train, test))
}
