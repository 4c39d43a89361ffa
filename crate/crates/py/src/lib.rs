//! Python bindings: build instances, partition, solve and verify.

use mdpbd::benders::{self, BendersConfig};
use mdpbd::data::{generate_grid, generate_synthetic, CostModel};
use mdpbd::instance::RecordKind;
use mdpbd::mech::exponential_mechanism;
use mdpbd::partition::{run_partition, Algorithm, Partition};
use mdpbd::pmo::{self, PerturbationMatrix};
use mdpbd::{build_graph, build_instance, MdpInstance, Metric, Record};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(mdpbd_py, MdpbdError, PyException);

fn err(e: mdpbd::Error) -> PyErr {
    match e {
        mdpbd::Error::InvalidInput(m) | mdpbd::Error::Validation(m) | mdpbd::Error::Config(m) => PyValueError::new_err(m),
        other => MdpbdError::new_err(other.to_string()),
    }
}

/// An mDP instance: secret records, outputs, distances and costs.
#[pyclass(name = "Instance", module = "mdpbd_py", frozen, skip_from_py_object)]
pub struct PyInstance {
    inner: MdpInstance,
}

#[pymethods]
impl PyInstance {
    /// Records and outputs are the given points; Euclidean metric, direct cost.
    #[new]
    #[pyo3(signature = (points, eta, epsilon, prior=None))]
    fn new(points: Vec<Vec<f64>>, eta: f64, epsilon: f64, prior: Option<Vec<f64>>) -> PyResult<Self> {
        let records: Vec<Record> =
            points.into_iter().enumerate().map(|(i, p)| Record::new(i, p, RecordKind::Synthetic)).collect();
        let inner = build_instance(records.clone(), records, &Metric::Euclidean, epsilon, eta, &CostModel::Direct, prior)
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (rows, cols, eta=2.0, epsilon=10.0, cell_km=1.0))]
    fn grid(rows: usize, cols: usize, eta: f64, epsilon: f64, cell_km: f64) -> PyResult<Self> {
        let recs = generate_grid(rows, cols, cell_km).map_err(err)?;
        let inner =
            build_instance(recs.clone(), recs, &Metric::Euclidean, epsilon, eta, &CostModel::Direct, None).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, dim=3, seed=0, eta=2.0, epsilon=10.0))]
    fn synthetic(n: usize, dim: usize, seed: u64, eta: f64, epsilon: f64) -> PyResult<Self> {
        let recs = generate_synthetic(n, dim, seed).map_err(err)?;
        let inner =
            build_instance(recs.clone(), recs, &Metric::Euclidean, epsilon, eta, &CostModel::Direct, None).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inst: MdpInstance = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: inst.revalidated().map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| MdpbdError::new_err(e.to_string()))
    }

    fn with_epsilon(&self, epsilon: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_epsilon(epsilon).map_err(err)? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    #[getter]
    fn dist(&self) -> Vec<Vec<f64>> {
        self.inner.dist().to_vec()
    }

    /// Prior-weighted cost matrix.
    #[getter]
    fn cost(&self) -> Vec<Vec<f64>> {
        self.inner.cost().to_vec()
    }

    fn component_count(&self) -> usize {
        build_graph(&self.inner).component_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, k={}, edges={}, epsilon={}, eta={})",
            self.inner.n(),
            self.inner.k(),
            self.inner.edges().len(),
            self.inner.epsilon(),
            self.inner.eta()
        )
    }
}

fn matrix(inst: &MdpInstance, z: Vec<Vec<f64>>) -> PyResult<PerturbationMatrix> {
    let z = PerturbationMatrix::new(z).map_err(err)?;
    if z.n() != inst.n() || z.k() != inst.k() {
        return Err(PyValueError::new_err(format!("matrix must be {}x{}", inst.n(), inst.k())));
    }
    Ok(z)
}

/// Subset id per record for algorithm `dv`, `rec`, `adj` or `bsc`.
#[pyfunction]
#[pyo3(signature = (instance, m, algorithm="bsc", seed=0))]
fn partition(instance: &PyInstance, m: usize, algorithm: &str, seed: u64) -> PyResult<Vec<usize>> {
    let alg: Algorithm = algorithm.parse().map_err(err)?;
    let g = build_graph(&instance.inner);
    Ok(run_partition(alg, &instance.inner, &g, m, seed).map_err(err)?.partition.assign)
}

/// Optimal matrix and objective of the full LP.
#[pyfunction]
fn solve_monolithic(py: Python<'_>, instance: &PyInstance) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let inst = instance.inner.clone();
    let (z, obj) = py.detach(move || pmo::solve_monolithic(&inst)).map_err(err)?;
    Ok((z.z, obj))
}

/// Benders decomposition over a partition given as one subset id per record.
#[pyfunction]
#[pyo3(signature = (instance, assignment, xi=0.01, max_iter=500, initial_cuts=true))]
fn solve_benders<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    assignment: Vec<usize>,
    xi: f64,
    max_iter: usize,
    initial_cuts: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let m = assignment.iter().max().map_or(0, |&l| l + 1);
    let p = Partition::from_assignment(assignment, m, &instance.inner).map_err(err)?;
    let cfg = BendersConfig { xi, max_iter, initial_cuts, ..Default::default() };
    let inst = instance.inner.clone();
    let state = py.detach(move || benders::run(&inst, &p, &build_graph(&inst), &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    let status = match state.status {
        benders::BendersStatus::Running => "running",
        benders::BendersStatus::Converged => "converged",
        benders::BendersStatus::NonConverged => "non_converged",
        benders::BendersStatus::Aborted => "aborted",
    };
    out.set_item("status", status)?;
    out.set_item("objective", state.objective())?;
    out.set_item("lower", state.lower)?;
    out.set_item("iterations", state.iteration)?;
    out.set_item("cuts", state.cuts.len())?;
    out.set_item("message", state.message.clone())?;
    out.set_item("matrix", state.best_z.map(|z| z.z))?;
    Ok(out)
}

#[pyfunction]
fn exponential_mechanism_matrix(instance: &PyInstance) -> Vec<Vec<f64>> {
    exponential_mechanism(&instance.inner).z
}

#[pyfunction]
fn expected_utility_loss(instance: &PyInstance, z: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(pmo::expected_utility_loss(&instance.inner, &matrix(&instance.inner, z)?))
}

/// Feasibility report for a matrix: violations, row-sum error and a flag.
#[pyfunction]
fn verify<'py>(py: Python<'py>, instance: &PyInstance, z: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = pmo::verify(&instance.inner, &matrix(&instance.inner, z)?).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("feasible", r.is_feasible())?;
    out.set_item("max_mdp_violation", r.max_mdp_violation)?;
    out.set_item("max_row_sum_error", r.max_row_sum_error)?;
    out.set_item("min_entry", r.min_entry)?;
    out.set_item("violating_triples", r.violating_triples)?;
    Ok(out)
}

#[pymodule]
fn mdpbd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add("MdpbdError", m.py().get_type::<MdpbdError>())?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(solve_monolithic, m)?)?;
    m.add_function(wrap_pyfunction!(solve_benders, m)?)?;
    m.add_function(wrap_pyfunction!(exponential_mechanism_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(expected_utility_loss, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
