//! Declarative experiment descriptions. Configs are TOML (JSON accepted);
//! every run needs a seed, either in the file or on the command line.

use crate::error::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Experiment families; each maps onto one family of study plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Single training run: training/validation loss trajectory.
    Train,
    /// Final losses versus the number of supervised pairs.
    Generalisation,
    /// Final losses versus the target-noise level.
    Noise,
    /// Semi-supervised run on graph-structured vertex data.
    Graph,
    /// Adversarial generator/discriminator run with diversity histogram.
    Gan,
    /// Risk bounds versus trained-network risk.
    Nfl,
    /// Parametrized-circuit training with shots and gate noise.
    Circuit,
    /// Gate-noise robustness of the network circuit versus the
    /// alternating-operator baseline.
    QaoaCompare,
    /// Monte-Carlo checks of the Haar-measure integral identities.
    HaarVerify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Train => "train",
            ExperimentKind::Generalisation => "generalisation",
            ExperimentKind::Noise => "noise",
            ExperimentKind::Graph => "graph",
            ExperimentKind::Gan => "gan",
            ExperimentKind::Nfl => "nfl",
            ExperimentKind::Circuit => "circuit",
            ExperimentKind::QaoaCompare => "qaoa-compare",
            ExperimentKind::HaarVerify => "haar-verify",
        }
    }
}

fn default_topology() -> Vec<usize> {
    vec![2, 3, 2]
}

fn default_pairs_total() -> usize {
    100
}

fn default_epochs() -> usize {
    1000
}

fn default_step_size() -> f64 {
    0.01
}

fn default_learning_rate() -> f64 {
    1.0
}

fn default_seeds() -> usize {
    10
}

fn default_gamma() -> f64 {
    -0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_topology")]
    pub topology: Vec<usize>,
    #[serde(default = "default_pairs_total")]
    pub pairs_total: usize,
    #[serde(default = "TrainSection::default_supervised")]
    pub pairs_supervised: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Target-noise level applied to the supervised pairs.
    #[serde(default)]
    pub target_noise: f64,
}

impl TrainSection {
    fn default_supervised() -> usize {
        10
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralisationSection {
    #[serde(default = "default_topology")]
    pub topology: Vec<usize>,
    #[serde(default = "default_pairs_total")]
    pub pairs_total: usize,
    #[serde(default = "GeneralisationSection::default_counts")]
    pub supervised_counts: Vec<usize>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

impl GeneralisationSection {
    fn default_counts() -> Vec<usize> {
        (1..=14).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default = "default_topology")]
    pub topology: Vec<usize>,
    #[serde(default = "default_pairs_total")]
    pub pairs_total: usize,
    #[serde(default = "NoiseSection::default_supervised")]
    pub pairs_supervised: usize,
    #[serde(default = "NoiseSection::default_levels")]
    pub noise_levels: Vec<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

impl NoiseSection {
    fn default_supervised() -> usize {
        20
    }

    fn default_levels() -> Vec<f64> {
        (0..=10).map(|k| k as f64 / 10.0).collect()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphDataset {
    ConnectedClusters,
    Line,
    Deepwalk,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub dataset: GraphDataset,
    #[serde(default = "GraphSection::default_topology")]
    pub topology: Vec<usize>,
    /// Vertex count for the line dataset.
    #[serde(default = "GraphSection::default_vertices")]
    pub vertices: usize,
    /// Overrides the dataset's canonical supervised vertex set.
    #[serde(default)]
    pub supervised_indices: Option<Vec<usize>>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Deepwalk ingestion inputs.
    #[serde(default)]
    pub embedding_file: Option<PathBuf>,
    #[serde(default)]
    pub labels_file: Option<PathBuf>,
    #[serde(default = "GraphSection::default_homophily")]
    pub homophily_level: f64,
    #[serde(default = "GraphSection::default_distance")]
    pub characteristic_distance: f64,
    #[serde(default = "GraphSection::default_deepwalk_supervised")]
    pub deepwalk_supervised: usize,
}

impl GraphSection {
    fn default_topology() -> Vec<usize> {
        vec![3, 1]
    }

    fn default_vertices() -> usize {
        10
    }

    fn default_homophily() -> f64 {
        2.0
    }

    fn default_distance() -> f64 {
        1.0
    }

    fn default_deepwalk_supervised() -> usize {
        10
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GanPool {
    Line,
    Clusters,
    ClustersConnected,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupervisedSelection {
    Random,
    Even,
    First,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GanSection {
    #[serde(default = "GanSection::default_generator")]
    pub generator: Vec<usize>,
    #[serde(default = "GanSection::default_discriminator")]
    pub discriminator: Vec<usize>,
    #[serde(default = "GanSection::default_pool")]
    pub pool: GanPool,
    #[serde(default = "GanSection::default_pool_size")]
    pub pool_size: usize,
    #[serde(default = "GanSection::default_supervised")]
    pub supervised_count: usize,
    #[serde(default = "GanSection::default_selection")]
    pub supervised_selection: SupervisedSelection,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "GanSection::default_rounds")]
    pub disc_rounds: usize,
    #[serde(default = "GanSection::default_rounds")]
    pub gen_rounds: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub disc_learning_rate: f64,
    #[serde(default = "default_learning_rate")]
    pub gen_learning_rate: f64,
    /// Batch size S; defaults to the supervised count.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default = "GanSection::default_validation_samples")]
    pub validation_samples: usize,
    #[serde(default = "GanSection::default_histogram_samples")]
    pub histogram_samples: usize,
    /// Early stop: abort when fewer than this many pool indices are covered.
    #[serde(default)]
    pub min_diversity: Option<usize>,
    #[serde(default = "GanSection::default_diversity_interval")]
    pub diversity_interval: usize,
}

impl GanSection {
    fn default_generator() -> Vec<usize> {
        vec![1, 1]
    }

    fn default_discriminator() -> Vec<usize> {
        vec![1, 1]
    }

    fn default_pool() -> GanPool {
        GanPool::Line
    }

    fn default_pool_size() -> usize {
        50
    }

    fn default_supervised() -> usize {
        10
    }

    fn default_selection() -> SupervisedSelection {
        SupervisedSelection::Random
    }

    fn default_rounds() -> usize {
        1
    }

    fn default_validation_samples() -> usize {
        100
    }

    fn default_histogram_samples() -> usize {
        100
    }

    fn default_diversity_interval() -> usize {
        100
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NflSection {
    #[serde(default = "NflSection::default_topology")]
    pub topology: Vec<usize>,
    #[serde(default = "NflSection::default_counts")]
    pub supervised_counts: Vec<usize>,
    #[serde(default = "NflSection::default_trials")]
    pub trials: usize,
    #[serde(default = "NflSection::default_inputs")]
    pub inputs_per_trial: usize,
    #[serde(default = "NflSection::default_pairs")]
    pub pairs_total: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
}

impl NflSection {
    fn default_topology() -> Vec<usize> {
        vec![2, 2]
    }

    fn default_counts() -> Vec<usize> {
        vec![1, 2, 3, 4]
    }

    fn default_trials() -> usize {
        10
    }

    fn default_inputs() -> usize {
        10
    }

    fn default_pairs() -> usize {
        4
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    #[serde(default = "CircuitSection::default_topology")]
    pub topology: Vec<usize>,
    #[serde(default)]
    pub plus_variant: bool,
    #[serde(default = "CircuitSection::default_supervised")]
    pub pairs_supervised: usize,
    #[serde(default = "CircuitSection::default_validation")]
    pub pairs_validation: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub shots: usize,
    /// Gate-noise scale k; omit for a noise-free run.
    #[serde(default)]
    pub noise_scale: Option<f64>,
}

impl CircuitSection {
    fn default_topology() -> Vec<usize> {
        vec![2, 2]
    }

    fn default_supervised() -> usize {
        4
    }

    fn default_validation() -> usize {
        4
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaoaCompareSection {
    #[serde(default = "QaoaCompareSection::default_width")]
    pub register_width: usize,
    #[serde(default = "QaoaCompareSection::default_topology")]
    pub topology: Vec<usize>,
    /// Alternating-circuit depth; defaults to `4^m / 2`.
    #[serde(default)]
    pub depth: Option<usize>,
    #[serde(default = "QaoaCompareSection::default_scales")]
    pub noise_scales: Vec<f64>,
    #[serde(default = "QaoaCompareSection::default_seeds")]
    pub seeds: usize,
    #[serde(default = "QaoaCompareSection::default_pairs")]
    pub pairs_supervised: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "QaoaCompareSection::default_network_step")]
    pub network_step_size: f64,
    #[serde(default = "QaoaCompareSection::default_network_rate")]
    pub network_learning_rate: f64,
    #[serde(default = "QaoaCompareSection::default_alternating_step")]
    pub alternating_step_size: f64,
    #[serde(default = "QaoaCompareSection::default_alternating_rate")]
    pub alternating_learning_rate: f64,
    #[serde(default)]
    pub shots: usize,
}

impl QaoaCompareSection {
    fn default_width() -> usize {
        2
    }

    fn default_topology() -> Vec<usize> {
        vec![2, 2]
    }

    fn default_scales() -> Vec<f64> {
        vec![0.0, 1.0, 4.0]
    }

    fn default_seeds() -> usize {
        3
    }

    fn default_pairs() -> usize {
        4
    }

    fn default_network_step() -> f64 {
        0.25
    }

    fn default_network_rate() -> f64 {
        0.5
    }

    fn default_alternating_step() -> f64 {
        0.05
    }

    fn default_alternating_rate() -> f64 {
        0.05
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaarVerifySection {
    #[serde(default = "HaarVerifySection::default_samples")]
    pub samples: usize,
    #[serde(default = "HaarVerifySection::default_s2_dims")]
    pub second_moment_dims: Vec<usize>,
    #[serde(default = "HaarVerifySection::default_s4_dims")]
    pub fourth_moment_dims: Vec<usize>,
    #[serde(default = "HaarVerifySection::default_moment_dim")]
    pub state_moment_dim: usize,
    #[serde(default = "HaarVerifySection::default_moment_count")]
    pub state_moment_count: usize,
    #[serde(default = "HaarVerifySection::default_moment_samples")]
    pub state_moment_samples: usize,
}

impl HaarVerifySection {
    fn default_samples() -> usize {
        100_000
    }

    fn default_s2_dims() -> Vec<usize> {
        vec![2, 3]
    }

    fn default_s4_dims() -> Vec<usize> {
        vec![2]
    }

    fn default_moment_dim() -> usize {
        2
    }

    fn default_moment_count() -> usize {
        20
    }

    fn default_moment_samples() -> usize {
        20_000
    }
}

/// Top-level config: a kind selector, mandatory seed, and one section per
/// kind.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub train: Option<TrainSection>,
    #[serde(default)]
    pub generalisation: Option<GeneralisationSection>,
    #[serde(default)]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub graph: Option<GraphSection>,
    #[serde(default)]
    pub gan: Option<GanSection>,
    #[serde(default)]
    pub nfl: Option<NflSection>,
    #[serde(default)]
    pub circuit: Option<CircuitSection>,
    #[serde(default, rename = "qaoa-compare")]
    pub qaoa_compare: Option<QaoaCompareSection>,
    #[serde(default, rename = "haar-verify")]
    pub haar_verify: Option<HaarVerifySection>,
}

impl ExperimentConfig {
    /// Parses TOML, accepting JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::InvalidConfig(format!("JSON config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("TOML config: {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// The seed is mandatory; the command line may supply or override it.
    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidConfig("missing required field `seed`".into()))
    }

    pub fn resolved_kind(&self, cli_kind: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (cli_kind, self.kind) {
            (Some(k), Some(c)) if k != c => Err(Error::InvalidConfig(format!(
                "config kind `{}` does not match requested kind `{}`",
                c.name(),
                k.name()
            ))),
            (Some(k), _) => Ok(k),
            (None, Some(c)) => Ok(c),
            (None, None) => Err(Error::InvalidConfig(
                "missing required field `kind`".into(),
            )),
        }
    }
}
