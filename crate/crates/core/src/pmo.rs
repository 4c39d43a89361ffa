//! The monolithic perturbation-matrix LP, feasibility checks and utility loss.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::MdpGraph;
use crate::instance::MdpInstance;
use crate::lp::{self, LpOutcome, LpProblem, Relation};

/// Absolute slack allowed on an mDP inequality.
pub const MDP_TOL: f64 = 1e-7;
/// Allowed deviation of a row sum from one.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Entries this far outside `[0, 1]` are clamped silently.
pub const CLAMP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationMatrix {
    pub z: Vec<Vec<f64>>,
}

impl PerturbationMatrix {
    pub fn new(z: Vec<Vec<f64>>) -> Result<Self> {
        let k = z.first().map_or(0, Vec::len);
        if z.is_empty() || k == 0 || z.iter().any(|r| r.len() != k) {
            return Err(invalid("perturbation matrix must be a non-empty rectangle"));
        }
        Ok(Self { z })
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Self { z: vec![vec![1.0 / k as f64; k]; n] }
    }

    /// Reshapes a flat `i * K + k` solution, clamping solver noise into
    /// `[0, 1]` and renormalizing each row.
    pub fn from_flat(x: &[f64], n: usize, k: usize) -> Result<Self> {
        if x.len() != n * k {
            return Err(invalid(format!("expected {} values, got {}", n * k, x.len())));
        }
        let z = x.chunks(k).map(normalize_row).collect::<Result<Vec<_>>>()?;
        Ok(Self { z })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn k(&self) -> usize {
        self.z[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.z
    }
}

pub(crate) fn normalize_row(row: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = row.iter().find(|v| !(**v >= -CLAMP_TOL && **v <= 1.0 + CLAMP_TOL)) {
        return Err(Error::Numeric(format!("solver returned probability {v}")));
    }
    let mut out: Vec<f64> = row.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let s: f64 = out.iter().sum();
    if s <= 0.0 {
        return Err(Error::Numeric("solver returned an all-zero row".into()));
    }
    out.iter_mut().for_each(|v| *v /= s);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub max_mdp_violation: f64,
    pub max_row_sum_error: f64,
    pub min_entry: f64,
    /// `(i, j, k)` with `z[i][k] > e^{eps d_ij} z[j][k] + MDP_TOL`.
    pub violating_triples: Vec<(usize, usize, usize)>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violating_triples.is_empty() && self.max_row_sum_error <= ROW_SUM_TOL && self.min_entry >= -CLAMP_TOL
    }
}

/// Variables `z_{i,k}` at `i * K + k`; both orientations of every edge
/// constraint as `>=` rows, then one unit-measure equality per record.
pub fn build_monolithic_lp(instance: &MdpInstance) -> LpProblem {
    let (n, k) = (instance.n(), instance.k());
    let objective = instance.cost().iter().flatten().copied().collect();
    let mut lp = LpProblem::new(objective);
    for &(i, j) in instance.edges() {
        let b = instance.edge_bound(i, j);
        if !b.is_finite() {
            continue;
        }
        for kk in 0..k {
            let (zi, zj) = (i * k + kk, j * k + kk);
            lp.add_row(vec![(zj, b), (zi, -1.0)], Relation::Ge, 0.0);
            lp.add_row(vec![(zi, b), (zj, -1.0)], Relation::Ge, 0.0);
        }
    }
    for i in 0..n {
        lp.add_row((0..k).map(|kk| (i * k + kk, 1.0)).collect(), Relation::Eq, 1.0);
    }
    lp
}

pub fn verify(instance: &MdpInstance, z: &PerturbationMatrix) -> Result<FeasibilityReport> {
    let (n, k) = (instance.n(), instance.k());
    if z.z.len() != n || z.z.iter().any(|r| r.len() != k) {
        return Err(invalid(format!("matrix shape does not match the {n}x{k} instance")));
    }
    let mut report = FeasibilityReport {
        max_mdp_violation: 0.0,
        max_row_sum_error: 0.0,
        min_entry: f64::INFINITY,
        violating_triples: Vec::new(),
    };
    for &(i, j) in instance.edges() {
        let b = instance.edge_bound(i, j);
        if !b.is_finite() {
            continue;
        }
        for kk in 0..k {
            for (a, c) in [(i, j), (j, i)] {
                let v = z.z[a][kk] - b * z.z[c][kk];
                report.max_mdp_violation = report.max_mdp_violation.max(v);
                if v > MDP_TOL || v.is_nan() {
                    report.violating_triples.push((a, c, kk));
                }
            }
        }
    }
    for row in &z.z {
        let s: f64 = row.iter().sum();
        report.max_row_sum_error = report.max_row_sum_error.max((s - 1.0).abs());
        report.min_entry = row.iter().copied().fold(report.min_entry, f64::min);
    }
    Ok(report)
}

pub fn expected_utility_loss(instance: &MdpInstance, z: &PerturbationMatrix) -> f64 {
    instance
        .cost()
        .iter()
        .zip(&z.z)
        .map(|(c, r)| c.iter().zip(r).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Solves the full LP in one piece. Returns the matrix and the LP objective.
pub fn solve_monolithic(instance: &MdpInstance) -> Result<(PerturbationMatrix, f64)> {
    let lp = build_monolithic_lp(instance);
    match lp::solve_auto(&lp)? {
        LpOutcome::Optimal(sol) => Ok((PerturbationMatrix::from_flat(&sol.primal, instance.n(), instance.k())?, sol.objective)),
        other => Err(Error::Internal(format!("PMO reported {:?}; the uniform matrix is always feasible", other.status()))),
    }
}

/// One LP per connected component of the mDP graph, rows reassembled in
/// record order.
pub fn solve_per_component(instance: &MdpInstance, graph: &MdpGraph) -> Result<(PerturbationMatrix, f64)> {
    if graph.n() != instance.n() {
        return Err(invalid("graph does not belong to this instance"));
    }
    let parts = graph
        .components()
        .into_par_iter()
        .map(|comp| {
            let sub = instance.restrict(&comp)?;
            let (z, obj) = solve_monolithic(&sub)?;
            Ok((comp, z, obj))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut z = vec![Vec::new(); instance.n()];
    let mut total = 0.0;
    for (comp, sub_z, obj) in parts {
        total += obj;
        for (row, i) in sub_z.z.into_iter().zip(comp) {
            z[i] = row;
        }
    }
    Ok((PerturbationMatrix { z }, total))
}
