//! Benders decomposition of the PMO along a partition.
//!
//! The master program holds the boundary perturbation vectors and one cost
//! estimate `w_l` per subset; subproblem `l` fixes the boundary iterate and
//! optimizes the internal vectors of subset `l`. Subproblem duals become
//! optimality cuts and Farkas rays become feasibility cuts.

pub mod blocks;
pub mod cuts;
mod master;

use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::MdpGraph;
use crate::instance::MdpInstance;
use crate::lp::{self, IncrementalLp, LpOutcome};
use crate::partition::Partition;
use crate::pmo::{normalize_row, verify, FeasibilityReport, PerturbationMatrix};

pub use blocks::{build_blocks, BlockRow, Blocks, SubproblemBlock};
pub use cuts::{component_initial_cuts, initial_cuts, Cut, CutKind, InitialCut};
pub use master::MasterSolution;

/// Relative tolerance of the per-subset optimality test.
pub const SUBSET_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendersConfig {
    /// Relative gap `best_upper - lower <= xi (1 + |best_upper|)` to stop at.
    pub xi: f64,
    pub max_iter: usize,
    pub initial_cuts: bool,
    /// Skip initial cuts implied by shorter ones.
    pub prune_initial_cuts: bool,
    /// Worker threads for subproblem and master solves; `None` uses the
    /// global pool.
    pub threads: Option<usize>,
    /// Wall-clock budget in seconds, checked between iterations.
    pub time_limit: Option<f64>,
    /// Keep every boundary iterate in the history.
    pub keep_iterates: bool,
    /// Dispatch subproblems in a seeded random order (results are still
    /// aggregated by subset index).
    pub shuffle_seed: Option<u64>,
}

impl Default for BendersConfig {
    fn default() -> Self {
        Self {
            xi: 0.01,
            max_iter: 500,
            initial_cuts: true,
            prune_initial_cuts: true,
            threads: None,
            time_limit: None,
            keep_iterates: false,
            shuffle_seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendersStatus {
    Running,
    Converged,
    NonConverged,
    Aborted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetStatus {
    /// No internal records.
    Empty,
    /// Feasible and `w_l` already matches the subproblem value.
    Converged,
    OptimalityCut,
    FeasibilityCut,
    /// The subproblem dual has no feasible point.
    DualInfeasible,
}

impl SubsetStatus {
    pub fn code(self) -> &'static str {
        match self {
            SubsetStatus::Empty => "empty",
            SubsetStatus::Converged => "converged",
            SubsetStatus::OptimalityCut => "optimality_cut",
            SubsetStatus::FeasibilityCut => "feasibility_cut",
            SubsetStatus::DualInfeasible => "dual_infeasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SubproblemResult {
    Empty,
    Feasible { value: f64, dual: Vec<f64>, x: Vec<f64> },
    Infeasible { ray: Vec<f64> },
    DualInfeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub master_value: f64,
    /// Running maximum of master values.
    pub lower: f64,
    /// Upper bound from this iteration, when every subproblem was feasible.
    pub upper: Option<f64>,
    pub best_upper: Option<f64>,
    pub cuts_added: usize,
    pub subset_status: Vec<SubsetStatus>,
    pub master_rows: usize,
    pub max_subproblem_rows: usize,
    pub master_seconds: f64,
    pub subproblem_seconds: f64,
    pub w_bar: Vec<f64>,
    pub z_bar: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BendersState {
    pub status: BendersStatus,
    pub iteration: usize,
    pub cuts: Vec<Cut>,
    pub initial_cut_count: usize,
    pub incumbent_boundary: Vec<Vec<f64>>,
    pub incumbent_w: Vec<f64>,
    pub best_upper: f64,
    pub lower: f64,
    pub history: Vec<IterationRecord>,
    pub best_z: Option<PerturbationMatrix>,
    pub verification: Option<FeasibilityReport>,
    pub message: Option<String>,
    pub wall_seconds: f64,
}

impl BendersState {
    pub fn gap(&self) -> f64 {
        self.best_upper - self.lower
    }

    pub fn objective(&self) -> Option<f64> {
        self.best_upper.is_finite().then_some(self.best_upper)
    }

    pub fn master_seconds(&self) -> f64 {
        self.history.iter().map(|h| h.master_seconds).sum()
    }

    pub fn subproblem_seconds(&self) -> f64 {
        self.history.iter().map(|h| h.subproblem_seconds).sum()
    }
}

pub fn solve_subproblem(block: &SubproblemBlock, z_bar: &[Vec<f64>]) -> Result<SubproblemResult> {
    if block.internal.is_empty() {
        return Ok(SubproblemResult::Empty);
    }
    classify(lp::solve_auto(&block.lp(z_bar))?)
}

/// Same as [`solve_subproblem`], resuming from the basis of the previous call
/// kept in `slot`: only the rhs moves between iterations.
fn resolve_subproblem(block: &SubproblemBlock, slot: &mut Option<IncrementalLp>, z_bar: &[Vec<f64>]) -> Result<SubproblemResult> {
    if block.internal.is_empty() {
        return Ok(SubproblemResult::Empty);
    }
    let lp = match slot {
        Some(lp) => {
            lp.set_rhs(&block.effective_rhs(z_bar))?;
            lp
        }
        None => slot.insert(IncrementalLp::new(block.lp(z_bar))?),
    };
    classify(lp.solve()?)
}

fn classify(outcome: LpOutcome) -> Result<SubproblemResult> {
    match outcome {
        LpOutcome::Optimal(s) => Ok(SubproblemResult::Feasible { value: s.objective, dual: s.dual, x: s.primal }),
        LpOutcome::Infeasible { farkas } => Ok(SubproblemResult::Infeasible { ray: farkas }),
        LpOutcome::Unbounded { .. } => Ok(SubproblemResult::DualInfeasible),
    }
}

/// The cut (if any) subproblem `l` asks for at the current master point.
pub fn generate_cut(block: &SubproblemBlock, w_bar: f64, result: &SubproblemResult, iteration: usize) -> (SubsetStatus, Option<Cut>) {
    match result {
        SubproblemResult::Empty => (SubsetStatus::Empty, None),
        SubproblemResult::DualInfeasible => (SubsetStatus::DualInfeasible, None),
        SubproblemResult::Infeasible { ray } => (
            SubsetStatus::FeasibilityCut,
            Some(Cut::from_ray(CutKind::Feasibility, block, ray.clone(), iteration)),
        ),
        SubproblemResult::Feasible { value, dual, .. } => {
            if w_bar >= value - SUBSET_TOL * (1.0 + value.abs()) {
                (SubsetStatus::Converged, None)
            } else {
                (
                    SubsetStatus::OptimalityCut,
                    Some(Cut::from_ray(CutKind::Optimality, block, dual.clone(), iteration)),
                )
            }
        }
    }
}

fn assemble(blocks: &Blocks, z_bar: &[Vec<f64>], results: &[SubproblemResult]) -> Result<PerturbationMatrix> {
    let k = blocks.k;
    let mut z = vec![Vec::new(); blocks.n];
    for &i in &blocks.boundary {
        z[i] = normalize_row(&z_bar[i])?;
    }
    for (block, res) in blocks.subproblems.iter().zip(results) {
        if let SubproblemResult::Feasible { x, .. } = res {
            for (p, &i) in block.internal.iter().enumerate() {
                z[i] = normalize_row(&x[p * k..(p + 1) * k])?;
            }
        }
    }
    if z.iter().any(Vec::is_empty) {
        return Err(Error::Internal("incumbent is missing rows".into()));
    }
    Ok(PerturbationMatrix { z })
}

/// Runs the decomposition to the `xi` gap, `max_iter` or the time limit.
pub fn run(instance: &MdpInstance, partition: &Partition, graph: &MdpGraph, config: &BendersConfig) -> Result<BendersState> {
    if !(config.xi >= 0.0 && config.xi.is_finite()) {
        return Err(invalid("xi must be a nonnegative number"));
    }
    if partition.assign.len() != instance.n() || graph.n() != instance.n() {
        return Err(invalid("partition and graph must cover the instance"));
    }
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_inner(instance, partition, graph, config)),
        None => run_inner(instance, partition, graph, config),
    }
}

fn run_inner(instance: &MdpInstance, partition: &Partition, graph: &MdpGraph, config: &BendersConfig) -> Result<BendersState> {
    let start = Instant::now();
    let blocks = build_blocks(instance, partition);
    let initial = if config.initial_cuts {
        component_initial_cuts(instance, graph, &blocks, config.prune_initial_cuts)
    } else {
        vec![Vec::new(); blocks.components.len()]
    };
    let layout = master::MasterLayout::new(&blocks, initial);
    let mut master = master::Master::new(&blocks, &layout)?;
    let sub_lps: Vec<Mutex<Option<IncrementalLp>>> = (0..blocks.m).map(|_| Mutex::new(None)).collect();
    let mut state = BendersState {
        status: BendersStatus::Running,
        iteration: 0,
        cuts: Vec::new(),
        initial_cut_count: layout.initial_count(),
        incumbent_boundary: Vec::new(),
        incumbent_w: vec![0.0; blocks.m],
        best_upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        history: Vec::new(),
        best_z: None,
        verification: None,
        message: None,
        wall_seconds: 0.0,
    };
    let order: Vec<usize> = match config.shuffle_seed {
        Some(seed) => {
            let mut o: Vec<usize> = (0..blocks.m).collect();
            o.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            o
        }
        None => (0..blocks.m).collect(),
    };

    while state.status == BendersStatus::Running {
        if state.iteration >= config.max_iter {
            state.status = BendersStatus::NonConverged;
            state.message = Some(format!("gap not closed after {} iterations", config.max_iter));
            break;
        }
        if config.time_limit.is_some_and(|t| start.elapsed().as_secs_f64() > t) {
            state.status = BendersStatus::NonConverged;
            state.message = Some("time limit reached".into());
            break;
        }
        state.iteration += 1;
        let it = state.iteration;

        let t0 = Instant::now();
        let mp = match master.solve(&blocks, &layout, &state.cuts) {
            Ok(mp) => mp,
            Err(e) => {
                state.status = BendersStatus::Aborted;
                state.message = Some(format!("master solve failed: {e}"));
                break;
            }
        };
        let master_seconds = t0.elapsed().as_secs_f64();
        state.lower = state.lower.max(mp.value);

        let t1 = Instant::now();
        let mut results: Vec<(usize, Result<SubproblemResult>)> = order
            .par_iter()
            .map(|&l| {
                let mut slot = sub_lps[l].lock().unwrap_or_else(|e| e.into_inner());
                (l, resolve_subproblem(&blocks.subproblems[l], &mut slot, &mp.z))
            })
            .collect();
        results.sort_by_key(|(l, _)| *l);
        let results = results.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>>>()?;
        let subproblem_seconds = t1.elapsed().as_secs_f64();

        let mut statuses = Vec::with_capacity(blocks.m);
        let mut new_cuts = Vec::new();
        for (l, res) in results.iter().enumerate() {
            let (status, cut) = generate_cut(&blocks.subproblems[l], mp.w[l], res, it);
            statuses.push(status);
            new_cuts.extend(cut);
        }

        let mut upper = None;
        if results.iter().all(|r| matches!(r, SubproblemResult::Feasible { .. } | SubproblemResult::Empty)) {
            let boundary_cost: f64 = blocks
                .boundary
                .iter()
                .map(|&i| blocks.cost[i].iter().zip(&mp.z[i]).map(|(c, z)| c * z).sum::<f64>())
                .sum();
            let internal: f64 = results
                .iter()
                .map(|r| match r {
                    SubproblemResult::Feasible { value, .. } => *value,
                    _ => 0.0,
                })
                .sum();
            let ub = boundary_cost + internal;
            upper = Some(ub);
            if ub < state.best_upper {
                state.best_upper = ub;
                state.best_z = Some(assemble(&blocks, &mp.z, &results)?);
            }
        }

        let cuts_added = new_cuts.len();
        state.cuts.extend(new_cuts);
        state.incumbent_w = mp.w.clone();
        state.history.push(IterationRecord {
            iteration: it,
            master_value: mp.value,
            lower: state.lower,
            upper,
            best_upper: state.best_upper.is_finite().then_some(state.best_upper),
            cuts_added,
            subset_status: statuses.clone(),
            master_rows: mp.rows,
            max_subproblem_rows: blocks.subproblems.iter().map(|s| s.rows.len()).max().unwrap_or(0),
            master_seconds,
            subproblem_seconds,
            w_bar: mp.w.clone(),
            z_bar: config.keep_iterates.then(|| mp.z.clone()),
        });
        state.incumbent_boundary = mp.z;

        if statuses.contains(&SubsetStatus::DualInfeasible) {
            state.status = BendersStatus::Aborted;
            let which: Vec<usize> = (0..blocks.m).filter(|&l| statuses[l] == SubsetStatus::DualInfeasible).collect();
            state.message = Some(format!("subproblem dual infeasible for subsets {which:?}"));
        } else if state.best_upper.is_finite() && state.best_upper - state.lower <= config.xi * (1.0 + state.best_upper.abs()) {
            state.status = BendersStatus::Converged;
        } else if cuts_added == 0 && upper.is_some() {
            // every subset is within its own tolerance: nothing left to separate
            state.status = BendersStatus::Converged;
            state.message = Some(format!("stopped at solver tolerance with gap {:e}", state.best_upper - state.lower));
        }
    }

    if let Some(z) = &state.best_z {
        state.verification = Some(verify(instance, z)?);
    }
    state.wall_seconds = start.elapsed().as_secs_f64();
    Ok(state)
}

/// `iteration,lower,upper,best_upper,cuts_added,master_rows,subset_0,...`.
pub fn write_convergence_csv(path: impl AsRef<Path>, state: &BendersState) -> Result<()> {
    let m = state.incumbent_w.len();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["iteration", "lower", "upper", "best_upper", "cuts_added", "master_rows", "master_seconds", "subproblem_seconds"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..m).map(|l| format!("subset_{l}")));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for h in &state.history {
        let mut rec = vec![
            h.iteration.to_string(),
            h.lower.to_string(),
            opt(h.upper),
            opt(h.best_upper),
            h.cuts_added.to_string(),
            h.master_rows.to_string(),
            h.master_seconds.to_string(),
            h.subproblem_seconds.to_string(),
        ];
        rec.extend(h.subset_status.iter().map(|s| s.code().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BendersSummary {
    pub status: BendersStatus,
    pub objective: Option<f64>,
    pub lower: f64,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub cuts: usize,
    pub feasibility_cuts: usize,
    pub initial_cuts: usize,
    pub wall_seconds: f64,
    pub master_seconds: f64,
    pub subproblem_seconds: f64,
    pub message: Option<String>,
}

impl From<&BendersState> for BendersSummary {
    fn from(s: &BendersState) -> Self {
        Self {
            status: s.status,
            objective: s.objective(),
            lower: s.lower,
            gap: s.objective().map(|_| s.gap()),
            iterations: s.iteration,
            cuts: s.cuts.len(),
            feasibility_cuts: s.cuts.iter().filter(|c| c.kind == CutKind::Feasibility).count(),
            initial_cuts: s.initial_cut_count,
            wall_seconds: s.wall_seconds,
            master_seconds: s.master_seconds(),
            subproblem_seconds: s.subproblem_seconds(),
            message: s.message.clone(),
        }
    }
}

pub fn write_summary_json(path: impl AsRef<Path>, state: &BendersState) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &BendersSummary::from(state))?;
    f.write_all(b"\n")?;
    Ok(())
}
