use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mdpbd::benders::{self, BendersConfig, BendersStatus, BendersSummary};
use mdpbd::data::files::{read_json, read_matrix_csv, write_json, write_matrix_csv};
use mdpbd::mech::exponential_mechanism;
use mdpbd::partition::{run_partition, Partition, PartitionStats, SummaryRow};
use mdpbd::pmo::{expected_utility_loss, solve_monolithic, verify as check_matrix, FeasibilityReport, PerturbationMatrix};
use mdpbd::{build_graph, MdpInstance};
use serde::{Deserialize, Serialize};

use crate::config::{CostSpec, DatasetConfig, DatasetSpec, OutputsSpec, PartitionSpec, RunConfig, SolverSpec, Subsample};
use crate::{CliError, CostArg, GenArgs, Method, PartitionArgs, ReportArgs, SolveArgs, VerifyArgs};

pub struct Context {
    pub out: PathBuf,
    pub threads: Option<usize>,
}

impl Context {
    fn out_dir(&self) -> Result<&Path, CliError> {
        fs::create_dir_all(&self.out).map_err(|source| CliError::Io { path: self.out.clone(), source })?;
        Ok(&self.out)
    }

    fn path_or(&self, given: Option<PathBuf>, name: &str) -> PathBuf {
        given.unwrap_or_else(|| self.out.join(name))
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    config: RunConfig,
    instance: MdpInstance,
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    config: RunConfig,
    partition: Partition,
    stats: PartitionStats,
    summary: Vec<SummaryRow>,
    /// Laplacian eigenvalues used by BSC.
    spectrum: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveSummary {
    pub config: RunConfig,
    pub method: String,
    pub dataset: String,
    pub epsilon: f64,
    pub n: usize,
    pub k: usize,
    /// `optimal`, `converged`, `non_converged`, `aborted` or `closed_form`.
    pub status: String,
    pub objective: Option<f64>,
    pub utility_loss: Option<f64>,
    pub iterations: Option<usize>,
    pub wall_seconds: f64,
    pub verification: Option<FeasibilityReport>,
    pub benders: Option<BendersSummary>,
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    config: &'a RunConfig,
    matrix: &'a Path,
    utility_loss: f64,
    feasible: bool,
    report: &'a FeasibilityReport,
}

fn load_instance(path: &Path) -> Result<InstanceFile, CliError> {
    let mut file: InstanceFile = read_json(path)?;
    file.instance = file.instance.revalidated()?;
    Ok(file)
}

/// CSV artifacts cannot embed the config, so it sits next to them.
fn write_config(dir: &Path, config: &RunConfig) -> Result<(), CliError> {
    Ok(write_json(dir.join("run_config.json"), config)?)
}

pub fn gen(ctx: &Context, a: GenArgs) -> Result<(), CliError> {
    let spec = if let Some((rows, cols)) = a.grid {
        DatasetSpec::Grid { rows, cols, cell_km: a.cell_km }
    } else if let Some(n) = a.synthetic {
        DatasetSpec::Synthetic { n, dim: a.dim, seed: a.seed }
    } else if let Some(path) = a.embeddings {
        DatasetSpec::Embeddings { path }
    } else {
        match (a.road_nodes, a.road_edges) {
            (Some(nodes), Some(edges)) => DatasetSpec::Road { nodes, edges },
            _ => return Err(CliError::Config("pick one of --grid, --synthetic, --embeddings or --road-nodes".into())),
        }
    };
    let geographic = matches!(spec, DatasetSpec::Grid { .. } | DatasetSpec::Road { .. });
    let cost = match a.cost {
        Some(CostArg::Destinations) => CostSpec::Destinations { count: a.destinations, seed: a.seed },
        None if geographic => CostSpec::Destinations { count: a.destinations, seed: a.seed },
        _ => CostSpec::Direct,
    };
    let config = RunConfig {
        version: env!("CARGO_PKG_VERSION").into(),
        dataset: DatasetConfig { spec, subsample: a.subsample.map(|size| Subsample { size, seed: a.seed }) },
        epsilon: a.epsilon,
        eta: a.eta,
        outputs: a.outputs.map_or(OutputsSpec::Records, |size| OutputsSpec::Sample { size, seed: a.seed }),
        cost,
        partition: None,
        solver: None,
        threads: ctx.threads,
        out_dir: ctx.out.clone(),
    };
    let instance = config.build_instance()?;
    let path = ctx.out_dir()?.join("instance.json");
    write_json(&path, &InstanceFile { config, instance: instance.clone() })?;
    println!(
        "wrote {} ({} records, {} outputs, {} edges)",
        path.display(),
        instance.n(),
        instance.k(),
        instance.edges().len()
    );
    Ok(())
}

pub fn partition(ctx: &Context, a: PartitionArgs) -> Result<(), CliError> {
    let InstanceFile { mut config, instance } = load_instance(&ctx.path_or(a.instance, "instance.json"))?;
    let graph = build_graph(&instance);
    let outcome = run_partition(a.algorithm, &instance, &graph, a.m, a.seed)?;
    let stats = PartitionStats::new(&outcome.partition, &instance, Some(&outcome.kmeans));
    let summary = stats.summary();
    config.partition = Some(PartitionSpec { algorithm: a.algorithm, m: a.m, seed: a.seed });
    config.out_dir = ctx.out.clone();
    let dir = ctx.out_dir()?;
    let mut w = csv::Writer::from_path(dir.join("partition_stats.csv")).map_err(mdpbd::Error::from)?;
    for row in &summary {
        w.serialize(row).map_err(mdpbd::Error::from)?;
    }
    w.flush().map_err(|source| CliError::Io { path: dir.join("partition_stats.csv"), source })?;
    write_config(dir, &config)?;
    let file = PartitionFile {
        config,
        partition: outcome.partition,
        stats,
        summary,
        spectrum: outcome.spectrum.map(|(v, _)| v),
    };
    write_json(dir.join("partition.json"), &file)?;
    for row in &file.summary {
        println!("{:<20} mean {:>8.2}  max {}", row.statistic, row.mean, row.max);
    }
    Ok(())
}

pub fn solve(ctx: &Context, a: SolveArgs) -> Result<(), CliError> {
    let InstanceFile { mut config, instance } = load_instance(&ctx.path_or(a.instance, "instance.json"))?;
    config.threads = ctx.threads;
    config.out_dir = ctx.out.clone();
    config.solver = Some(match a.method {
        Method::Monolithic => SolverSpec::Monolithic,
        Method::Expmech => SolverSpec::Expmech,
        Method::Benders => SolverSpec::Benders {
            xi: a.xi,
            max_iter: a.max_iter,
            initial_cuts: !a.no_initial_cuts,
            time_limit: a.time_limit,
        },
    });
    config.validate()?;
    let start = Instant::now();
    let (z, status, iterations, benders_summary, state) = match a.method {
        Method::Monolithic => {
            let (z, _) = solve_monolithic(&instance)?;
            (Some(z), "optimal".to_string(), None, None, None)
        }
        Method::Expmech => (Some(exponential_mechanism(&instance)), "closed_form".to_string(), None, None, None),
        Method::Benders => {
            let path = ctx.path_or(a.partition, "partition.json");
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "benders needs a partition; run `mdpbd partition` first or pass --partition ({} not found)",
                    path.display()
                )));
            }
            let pf: PartitionFile = read_json(&path)?;
            if pf.config.dataset != config.dataset || pf.partition.assign.len() != instance.n() {
                return Err(CliError::Config(format!("{} was built for a different instance", path.display())));
            }
            config.partition = pf.config.partition;
            let cfg = BendersConfig {
                xi: a.xi,
                max_iter: a.max_iter,
                initial_cuts: !a.no_initial_cuts,
                threads: ctx.threads,
                time_limit: a.time_limit,
                ..Default::default()
            };
            let state = benders::run(&instance, &pf.partition, &build_graph(&instance), &cfg)?;
            let status = serde_json::to_value(state.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            (state.best_z.clone(), status, Some(state.iteration), Some(BendersSummary::from(&state)), Some(state))
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    let dir = ctx.out_dir()?;
    let verification = z.as_ref().map(|z| check_matrix(&instance, z)).transpose()?;
    let utility_loss = z.as_ref().map(|z| expected_utility_loss(&instance, z));
    let objective = match (&state, utility_loss) {
        (Some(s), _) => s.objective(),
        (None, u) => u,
    };
    let summary = SolveSummary {
        config: config.clone(),
        method: config.solver.as_ref().map_or("", SolverSpec::method).into(),
        dataset: config.dataset.label(),
        epsilon: instance.epsilon(),
        n: instance.n(),
        k: instance.k(),
        status,
        objective,
        utility_loss,
        iterations,
        wall_seconds,
        verification: verification.clone(),
        benders: benders_summary,
    };
    write_config(dir, &config)?;
    write_json(dir.join("summary.json"), &summary)?;
    if let Some(s) = &state {
        benders::write_convergence_csv(dir.join("convergence.csv"), s)?;
    }
    if let Some(report) = &verification {
        if !report.is_feasible() {
            return Err(CliError::Verification(format!(
                "{} violated triples, row-sum error {:.3e}; matrix not written",
                report.violating_triples.len(),
                report.max_row_sum_error
            )));
        }
    }
    if let Some(z) = &z {
        write_matrix_csv(dir.join("matrix.csv"), &z.z)?;
    }
    match &state {
        Some(s) if s.status == BendersStatus::Aborted => {
            return Err(CliError::Aborted(s.message.clone().unwrap_or_else(|| "no message".into())))
        }
        Some(s) if s.status == BendersStatus::NonConverged => {
            log::warn!("benders stopped after {} iterations with gap {:.3e}", s.iteration, s.gap());
        }
        _ => {}
    }
    println!(
        "{}: status {}, objective {}, {:.2}s",
        summary.method,
        summary.status,
        summary.objective.map_or("none".into(), |v| format!("{v:.6}")),
        wall_seconds
    );
    Ok(())
}

pub fn verify(ctx: &Context, a: VerifyArgs) -> Result<(), CliError> {
    let InstanceFile { config, instance } = load_instance(&ctx.path_or(a.instance, "instance.json"))?;
    let matrix = ctx.path_or(a.matrix, "matrix.csv");
    let z = PerturbationMatrix::new(read_matrix_csv(&matrix)?)?;
    if z.n() != instance.n() || z.k() != instance.k() {
        return Err(CliError::Verification(format!(
            "matrix is {}x{}, instance needs {}x{}",
            z.n(),
            z.k(),
            instance.n(),
            instance.k()
        )));
    }
    let report = check_matrix(&instance, &z)?;
    let feasible = report.is_feasible();
    let out = VerifyFile {
        config: &config,
        matrix: &matrix,
        utility_loss: expected_utility_loss(&instance, &z),
        feasible,
        report: &report,
    };
    write_json(ctx.out_dir()?.join("verification.json"), &out)?;
    println!(
        "max mDP violation {:.3e}, max row-sum error {:.3e}, min entry {:.3e}",
        report.max_mdp_violation, report.max_row_sum_error, report.min_entry
    );
    if !feasible {
        return Err(CliError::Verification(format!("{} violated triples", report.violating_triples.len())));
    }
    println!("feasible");
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    run: String,
    method: String,
    dataset: String,
    epsilon: f64,
    n: usize,
    k: usize,
    status: String,
    objective: Option<f64>,
    utility_loss: Option<f64>,
    /// Percent above the smallest loss among runs on the same dataset and epsilon.
    utility_gap_pct: Option<f64>,
    iterations: Option<usize>,
    wall_seconds: f64,
}

const REPORT_HEADER: [&str; 12] = [
    "run",
    "method",
    "dataset",
    "epsilon",
    "n",
    "k",
    "status",
    "objective",
    "utility_loss",
    "utility_gap_pct",
    "iterations",
    "wall_seconds",
];

pub fn report(ctx: &Context, a: ReportArgs) -> Result<(), CliError> {
    let mut runs: Vec<(String, SolveSummary)> = Vec::new();
    for p in &a.runs {
        let file = if p.is_dir() { p.join("summary.json") } else { p.clone() };
        match read_json::<SolveSummary>(&file) {
            Ok(s) => runs.push((p.display().to_string(), s)),
            Err(e) => log::warn!("skipping {}: {e}", file.display()),
        }
    }
    let mut best_loss: BTreeMap<(String, u64, usize, usize), f64> = BTreeMap::new();
    for (_, s) in &runs {
        if let Some(u) = s.utility_loss {
            let e = best_loss.entry((s.dataset.clone(), s.epsilon.to_bits(), s.n, s.k)).or_insert(u);
            *e = e.min(u);
        }
    }
    let output = match a.output {
        Some(p) => p,
        None => ctx.out_dir()?.join("report.csv"),
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&output).map_err(mdpbd::Error::from)?;
    w.write_record(REPORT_HEADER).map_err(mdpbd::Error::from)?;
    for (run, s) in runs {
        let best = best_loss.get(&(s.dataset.clone(), s.epsilon.to_bits(), s.n, s.k));
        let gap = s.utility_loss.zip(best).and_then(|(u, &b)| {
            if b > 0.0 {
                Some(100.0 * (u - b) / b)
            } else {
                (u == 0.0).then_some(0.0)
            }
        });
        let row = ReportRow {
            run,
            method: s.method,
            dataset: s.dataset,
            epsilon: s.epsilon,
            n: s.n,
            k: s.k,
            status: s.status,
            objective: s.objective,
            utility_loss: s.utility_loss,
            utility_gap_pct: gap,
            iterations: s.iterations,
            wall_seconds: s.wall_seconds,
        };
        w.serialize(row).map_err(mdpbd::Error::from)?;
    }
    w.flush().map_err(|source| CliError::Io { path: output.clone(), source })?;
    println!("wrote {}", output.display());
    Ok(())
}
