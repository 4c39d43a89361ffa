//! Run configuration carried by every artifact.

use std::path::PathBuf;
use std::sync::Arc;

use mdpbd::data::{generate_grid, generate_synthetic, load_embeddings, load_road_network, subsample, CostModel, PathSource};
use mdpbd::partition::Algorithm;
use mdpbd::{build_instance, MdpInstance, Metric, Record};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    Grid { rows: usize, cols: usize, cell_km: f64 },
    Synthetic { n: usize, dim: usize, seed: u64 },
    Embeddings { path: PathBuf },
    Road { nodes: PathBuf, edges: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub size: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(flatten)]
    pub spec: DatasetSpec,
    pub subsample: Option<Subsample>,
}

impl DatasetConfig {
    /// Short label used to group runs in reports.
    pub fn label(&self) -> String {
        let base = match &self.spec {
            DatasetSpec::Grid { rows, cols, .. } => format!("grid-{rows}x{cols}"),
            DatasetSpec::Synthetic { n, dim, seed } => format!("synthetic-{n}x{dim}-s{seed}"),
            DatasetSpec::Embeddings { path } => format!("embeddings-{}", stem(path)),
            DatasetSpec::Road { nodes, .. } => format!("road-{}", stem(nodes)),
        };
        match &self.subsample {
            Some(s) => format!("{base}-sub{}-s{}", s.size, s.seed),
            None => base,
        }
    }
}

fn stem(p: &std::path::Path) -> String {
    p.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned())
}

/// Perturbed output set: the secret records themselves or a seeded sample of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputsSpec {
    Records,
    Sample { size: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    Direct,
    Destinations { count: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub algorithm: Algorithm,
    pub m: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Monolithic,
    Benders { xi: f64, max_iter: usize, initial_cuts: bool, time_limit: Option<f64> },
    Expmech,
}

impl SolverSpec {
    pub fn method(&self) -> &'static str {
        match self {
            SolverSpec::Monolithic => "monolithic",
            SolverSpec::Benders { .. } => "benders",
            SolverSpec::Expmech => "expmech",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: String,
    pub dataset: DatasetConfig,
    pub epsilon: f64,
    pub eta: f64,
    pub outputs: OutputsSpec,
    pub cost: CostSpec,
    pub partition: Option<PartitionSpec>,
    pub solver: Option<SolverSpec>,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("--epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("--eta must be nonnegative, got {}", self.eta));
        }
        if let CostSpec::Destinations { count, .. } = self.cost {
            if count == 0 {
                return bad("--destinations must be at least 1".into());
            }
            if !matches!(self.dataset.spec, DatasetSpec::Grid { .. } | DatasetSpec::Road { .. }) {
                return bad("the destination cost model needs a grid or road dataset; use --cost direct".into());
            }
        }
        if let Some(SolverSpec::Benders { xi, max_iter, .. }) = self.solver {
            if xi.is_nan() || xi < 0.0 || max_iter == 0 {
                return bad("benders needs --xi >= 0 and --max-iter >= 1".into());
            }
        }
        if self.threads == Some(0) {
            return bad("--threads must be at least 1".into());
        }
        Ok(())
    }

    /// Loads or generates the records and assembles the instance.
    pub fn build_instance(&self) -> Result<MdpInstance, CliError> {
        self.validate()?;
        let mut road = None;
        let (records, metric): (Vec<Record>, Metric) = match &self.dataset.spec {
            DatasetSpec::Grid { rows, cols, cell_km } => (generate_grid(*rows, *cols, *cell_km)?, Metric::Euclidean),
            DatasetSpec::Synthetic { n, dim, seed } => (generate_synthetic(*n, *dim, *seed)?, Metric::Euclidean),
            DatasetSpec::Embeddings { path } => (load_embeddings(path)?.1, Metric::Euclidean),
            DatasetSpec::Road { nodes, edges } => {
                let net = Arc::new(load_road_network(nodes, edges)?);
                road = Some(net.clone());
                (net.records(), Metric::Haversine)
            }
        };
        let records = match &self.dataset.subsample {
            Some(s) => subsample(&records, s.size, s.seed)?,
            None => records,
        };
        let outputs = match &self.outputs {
            OutputsSpec::Records => records.clone(),
            OutputsSpec::Sample { size, seed } => subsample(&records, *size, *seed)?,
        };
        let cost = match &self.cost {
            CostSpec::Direct => CostModel::Direct,
            CostSpec::Destinations { count, seed } => {
                let source = road.map_or(PathSource::Euclidean, PathSource::Road);
                CostModel::sampled_destinations(records.len(), *count, *seed, source)
            }
        };
        Ok(build_instance(records, outputs, &metric, self.epsilon, self.eta, &cost, None)?)
    }
}
