//! Partitioning the secret records into M subsets and classifying boundary
//! versus internal records.

pub mod kmeans;
pub mod spectral;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::MdpGraph;
use crate::instance::MdpInstance;

pub use kmeans::{kmeans, KMeansResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// k-means on rows of the distance matrix.
    Dv,
    /// k-means on record coordinates.
    Rec,
    /// k-means on binary adjacency rows.
    Adj,
    /// k-means on the smallest Laplacian eigenvectors.
    Bsc,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dv => "dv",
            Algorithm::Rec => "rec",
            Algorithm::Adj => "adj",
            Algorithm::Bsc => "bsc",
        })
    }
}

impl FromStr for Algorithm {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dv" => Ok(Algorithm::Dv),
            "rec" => Ok(Algorithm::Rec),
            "adj" => Ok(Algorithm::Adj),
            "bsc" => Ok(Algorithm::Bsc),
            _ => Err(invalid(format!("unknown partition algorithm {s:?} (expected dv, rec, adj or bsc)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub m: usize,
    pub assign: Vec<usize>,
    /// Sorted boundary records of each subset.
    pub boundary: Vec<Vec<usize>>,
    /// Sorted internal records of each subset.
    pub internal: Vec<Vec<usize>>,
}

impl Partition {
    pub fn from_assignment(assign: Vec<usize>, m: usize, instance: &MdpInstance) -> Result<Self> {
        if assign.len() != instance.n() {
            return Err(invalid(format!("assignment covers {} of {} records", assign.len(), instance.n())));
        }
        if m == 0 {
            return Err(invalid("partition needs at least one subset"));
        }
        if let Some(&l) = assign.iter().find(|&&l| l >= m) {
            return Err(invalid(format!("subset id {l} out of range for m = {m}")));
        }
        let (boundary, internal) = classify_boundary(&assign, m, instance);
        Ok(Self { m, assign, boundary, internal })
    }

    /// Sorted members of each subset.
    pub fn subsets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (i, &l) in self.assign.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn is_boundary(&self) -> Vec<bool> {
        let mut flag = vec![false; self.assign.len()];
        for &i in self.boundary.iter().flatten() {
            flag[i] = true;
        }
        flag
    }
}

/// A record is boundary iff it has a neighbor assigned elsewhere.
pub fn classify_boundary(assign: &[usize], m: usize, instance: &MdpInstance) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut flag = vec![false; assign.len()];
    for &(i, j) in instance.edges() {
        if assign[i] != assign[j] {
            flag[i] = true;
            flag[j] = true;
        }
    }
    let mut boundary = vec![Vec::new(); m];
    let mut internal = vec![Vec::new(); m];
    for (i, &l) in assign.iter().enumerate() {
        if flag[i] {
            boundary[l].push(i);
        } else {
            internal[l].push(i);
        }
    }
    (boundary, internal)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Independent blocks of the master program: boundary records linked by an
/// edge or by sharing a subset. Each list is sorted; lists are ordered by
/// their smallest record.
pub fn mp_components(partition: &Partition, instance: &MdpInstance) -> Vec<Vec<usize>> {
    let n = instance.n();
    let flag = partition.is_boundary();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j) in instance.edges() {
        if flag[i] && flag[j] {
            union(&mut parent, i, j);
        }
    }
    for ys in &partition.boundary {
        for w in ys.windows(2) {
            union(&mut parent, w[0], w[1]);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in (0..n).filter(|&i| flag[i]) {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub subset_sizes: Vec<usize>,
    pub boundary_counts: Vec<usize>,
    pub mp_component_sizes: Vec<usize>,
    /// Un-squared k-means objective.
    pub kmeans_objective: f64,
    pub kmeans_objective_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub statistic: String,
    pub mean: f64,
    pub max: usize,
}

fn mean_max(name: &str, v: &[usize]) -> SummaryRow {
    let mean = if v.is_empty() { 0.0 } else { v.iter().sum::<usize>() as f64 / v.len() as f64 };
    SummaryRow { statistic: name.into(), mean, max: v.iter().copied().max().unwrap_or(0) }
}

impl PartitionStats {
    pub fn new(partition: &Partition, instance: &MdpInstance, km: Option<&KMeansResult>) -> Self {
        Self {
            subset_sizes: partition.subsets().iter().map(Vec::len).collect(),
            boundary_counts: partition.boundary.iter().map(Vec::len).collect(),
            mp_component_sizes: mp_components(partition, instance).iter().map(Vec::len).collect(),
            kmeans_objective: km.map_or(0.0, |k| k.objective),
            kmeans_objective_sq: km.map_or(0.0, |k| k.objective_sq),
        }
    }

    /// Mean and max of subproblem sizes, boundary counts and MP component sizes.
    pub fn summary(&self) -> Vec<SummaryRow> {
        vec![
            mean_max("subproblem_size", &self.subset_sizes),
            mean_max("boundary_records", &self.boundary_counts),
            mean_max("mp_component_size", &self.mp_component_sizes),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct PartitionOutcome {
    pub partition: Partition,
    pub kmeans: KMeansResult,
    /// Laplacian eigenvalues used by BSC (ascending), with their max residual.
    pub spectrum: Option<(Vec<f64>, f64)>,
}

fn finish(instance: &MdpInstance, km: KMeansResult, m: usize) -> Result<PartitionOutcome> {
    let partition = Partition::from_assignment(km.assign.clone(), m, instance)?;
    Ok(PartitionOutcome { partition, kmeans: km, spectrum: None })
}

fn check_m(instance: &MdpInstance, m: usize) -> Result<()> {
    if m == 0 || m > instance.n() {
        return Err(invalid(format!("m = {m} must be in 1..={}", instance.n())));
    }
    Ok(())
}

pub fn partition_dv(instance: &MdpInstance, m: usize, seed: u64) -> Result<PartitionOutcome> {
    check_m(instance, m)?;
    finish(instance, kmeans(instance.dist(), m, seed)?, m)
}

pub fn partition_rec(instance: &MdpInstance, m: usize, seed: u64) -> Result<PartitionOutcome> {
    check_m(instance, m)?;
    let pts: Vec<Vec<f64>> = instance.records().iter().map(|r| r.coords.clone()).collect();
    finish(instance, kmeans(&pts, m, seed)?, m)
}

fn adjacency_lists(graph: &MdpGraph) -> Vec<Vec<usize>> {
    (0..graph.n()).map(|i| graph.neighbors(i).iter().map(|&(j, _)| j).collect()).collect()
}

pub fn partition_adj(instance: &MdpInstance, graph: &MdpGraph, m: usize, seed: u64) -> Result<PartitionOutcome> {
    check_m(instance, m)?;
    let n = instance.n();
    let rows: Vec<Vec<f64>> = adjacency_lists(graph)
        .into_iter()
        .map(|nb| {
            let mut w = vec![0.0; n];
            nb.into_iter().for_each(|j| w[j] = 1.0);
            w
        })
        .collect();
    finish(instance, kmeans(&rows, m, seed)?, m)
}

pub fn partition_bsc(instance: &MdpInstance, graph: &MdpGraph, m: usize, seed: u64) -> Result<PartitionOutcome> {
    check_m(instance, m)?;
    if m < graph.component_count() {
        log::warn!(
            "BSC with m = {m} below the {} graph components: the spectral embedding is degenerate",
            graph.component_count()
        );
    }
    let l = spectral::laplacian(&adjacency_lists(graph));
    let eig = spectral::jacobi_eigen(&l)?;
    let residual = (0..m)
        .map(|c| spectral::residual(&l, eig.values[c], &eig.vectors[c]))
        .fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = (0..instance.n()).map(|i| (0..m).map(|c| eig.vectors[c][i]).collect()).collect();
    let mut out = finish(instance, kmeans(&rows, m, seed)?, m)?;
    out.spectrum = Some((eig.values, residual));
    Ok(out)
}

pub fn run_partition(
    algorithm: Algorithm,
    instance: &MdpInstance,
    graph: &MdpGraph,
    m: usize,
    seed: u64,
) -> Result<PartitionOutcome> {
    match algorithm {
        Algorithm::Dv => partition_dv(instance, m, seed),
        Algorithm::Rec => partition_rec(instance, m, seed),
        Algorithm::Adj => partition_adj(instance, graph, m, seed),
        Algorithm::Bsc => partition_bsc(instance, graph, m, seed),
    }
}
