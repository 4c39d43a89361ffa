use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::blocks::{Blocks, SubproblemBlock};
use crate::graph::{chain_bound, MdpGraph};
use crate::instance::MdpInstance;
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    Feasibility,
    Optimality,
}

/// `sum z_coeffs . z + w_coeff * w_subset >= rhs` over master variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub subset: usize,
    pub iteration: usize,
    /// Dual vector over the subproblem rows it was built from.
    pub ray: Vec<f64>,
    /// `(record, k, coefficient)`, sorted.
    pub z_coeffs: Vec<(usize, usize, f64)>,
    pub w_coeff: f64,
    pub rhs: f64,
}

impl Cut {
    /// Materializes `(b - B z)^T a` into master coefficients.
    pub fn from_ray(kind: CutKind, block: &SubproblemBlock, ray: Vec<f64>, iteration: usize) -> Self {
        let mut rhs = 0.0;
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (row, &a) in block.rows.iter().zip(&ray) {
            if a == 0.0 {
                continue;
            }
            rhs += a * row.rhs;
            for &(i, k, v) in &row.y {
                *acc.entry((i, k)).or_insert(0.0) += a * v;
            }
        }
        let z_coeffs = acc.into_iter().filter(|&(_, v)| v != 0.0).map(|((i, k), v)| (i, k, v)).collect();
        let w_coeff = match kind {
            CutKind::Optimality => 1.0,
            CutKind::Feasibility => 0.0,
        };
        Self { kind, subset: block.subset, iteration, ray, z_coeffs, w_coeff, rhs }
    }

    /// `lhs - rhs` at a master point; negative means the cut is violated.
    pub fn slack(&self, z: &[Vec<f64>], w: f64) -> f64 {
        let lhs: f64 = self.z_coeffs.iter().map(|&(i, k, v)| v * z[i][k]).sum::<f64>() + self.w_coeff * w;
        lhs - self.rhs
    }

    /// `(b - B z)^T a` at a boundary point.
    pub fn dual_value(&self, z: &[Vec<f64>]) -> f64 {
        self.rhs - self.z_coeffs.iter().map(|&(i, k, v)| v * z[i][k]).sum::<f64>()
    }
}

/// `z_{i,k} <= bound * z_{j,k}` for every k.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialCut {
    pub i: usize,
    pub j: usize,
    pub bound: f64,
}

const PATH_TOL: f64 = 1e-12;

/// Chain-rule rows for every ordered pair of distinct, non-neighboring
/// boundary records joined by a path.
pub fn initial_cuts(instance: &MdpInstance, graph: &MdpGraph, partition: &Partition) -> Vec<InitialCut> {
    let boundary: Vec<usize> = partition.boundary.iter().flatten().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let eps = instance.epsilon();
    let mut out = Vec::new();
    for &i in &boundary {
        let d = graph.shortest_paths(i).dist;
        for &j in &boundary {
            if i == j || instance.dist()[i][j] <= instance.eta() || !d[j].is_finite() {
                continue;
            }
            let bound = chain_bound(eps, d[j]);
            if bound.is_finite() {
                out.push(InitialCut { i, j, bound });
            }
        }
    }
    out
}

/// The initial cuts the master can use, one group per master component.
///
/// Pairs in different components are dropped, since each component is
/// solved on its own. With `prune`, a pair is also dropped when some other
/// boundary record `m` of the component lies on a shortest path with both
/// legs strictly shorter and already enforced at full strength, either by a
/// master edge row (`d = D`) or by another initial cut; the implied chain is
/// then as tight as the dropped row.
pub fn component_initial_cuts(instance: &MdpInstance, graph: &MdpGraph, blocks: &Blocks, prune: bool) -> Vec<Vec<InitialCut>> {
    let eps = instance.epsilon();
    let eta = instance.eta();
    let dist = instance.dist();
    blocks
        .components
        .iter()
        .map(|comp| {
            let paths: Vec<Vec<f64>> = comp
                .iter()
                .map(|&i| {
                    let d = graph.shortest_paths(i).dist;
                    comp.iter().map(|&j| d[j]).collect()
                })
                .collect();
            let s = comp.len();
            // leg (a, b) is enforced at strength D when not a neighbor pair, or
            // when the direct edge is itself a shortest path
            let full = |a: usize, b: usize| {
                let dd = dist[comp[a]][comp[b]];
                dd > eta || dd <= paths[a][b] * (1.0 + PATH_TOL)
            };
            let mut out = Vec::new();
            for a in 0..s {
                for b in 0..s {
                    let dab = paths[a][b];
                    if a == b || dist[comp[a]][comp[b]] <= eta || !dab.is_finite() {
                        continue;
                    }
                    let bound = chain_bound(eps, dab);
                    if !bound.is_finite() {
                        continue;
                    }
                    let dominated = prune
                        && (0..s).any(|c| {
                            c != a
                                && c != b
                                && paths[a][c] > 0.0
                                && paths[c][b] > 0.0
                                && paths[a][c] + paths[c][b] <= dab * (1.0 + PATH_TOL)
                                && full(a, c)
                                && full(c, b)
                        });
                    if !dominated {
                        out.push(InitialCut { i: comp[a], j: comp[b], bound });
                    }
                }
            }
            out
        })
        .collect()
}
