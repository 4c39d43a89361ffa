//! Records, distance metrics and the problem-instance container.
//!
//! An [`MdpInstance`] is immutable once built: every other module reads
//! distances, neighbor edges and the prior-weighted cost matrix from it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::cost::{build_cost_matrix, CostModel};
use crate::data::road::RoadNetwork;
use crate::error::{invalid, Error, Result};

/// Mean Earth radius used by the haversine metric, in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    GeoRoad,
    GeoGrid,
    Embedding,
    Synthetic,
}

/// A secret or perturbed record. Geo records carry `[lat, lon]` in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: usize,
    pub coords: Vec<f64>,
    pub kind: RecordKind,
}

impl Record {
    pub fn new(id: usize, coords: Vec<f64>, kind: RecordKind) -> Self {
        Self { id, coords, kind }
    }

    fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(invalid(format!("record {} has no coordinates", self.id)));
        }
        if self.coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid(format!("record {} has a non-finite coordinate", self.id)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Haversine,
    Euclidean,
    RoadPath,
    Precomputed,
}

#[derive(Clone, Debug)]
pub enum Metric {
    /// Great-circle distance in km between `[lat, lon]` pairs.
    Haversine,
    Euclidean,
    /// Shortest road path in km; records are snapped to their nearest road node.
    RoadPath(Option<Arc<RoadNetwork>>),
    /// Full matrix indexed by `Record::id`.
    Precomputed(Arc<Vec<Vec<f64>>>),
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::Haversine => MetricKind::Haversine,
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::RoadPath(_) => MetricKind::RoadPath,
            Metric::Precomputed(_) => MetricKind::Precomputed,
        }
    }

    /// True for the variants guaranteed to satisfy the triangle inequality.
    pub fn is_true_metric(&self) -> bool {
        !matches!(self, Metric::Precomputed(_))
    }
}

pub fn haversine_km(a: &[f64], b: &[f64]) -> f64 {
    let (lat1, lon1) = (a[0].to_radians(), a[1].to_radians());
    let (lat2, lon2) = (b[0].to_radians(), b[1].to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn distance(metric: &Metric, a: &Record, b: &Record) -> Result<f64> {
    if a.coords.len() != b.coords.len() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.coords.len(),
            b.coords.len()
        )));
    }
    match metric {
        Metric::Haversine => {
            if a.coords.len() != 2 {
                return Err(invalid("haversine needs [lat, lon] coordinates"));
            }
            Ok(haversine_km(&a.coords, &b.coords))
        }
        Metric::Euclidean => Ok(euclidean(&a.coords, &b.coords)),
        Metric::RoadPath(road) => {
            let road = road
                .as_ref()
                .ok_or_else(|| Error::Config("road-path metric has no road network attached".into()))?;
            let u = road.nearest_node(&a.coords);
            let v = road.nearest_node(&b.coords);
            Ok(road.shortest_paths_from(u)[v])
        }
        Metric::Precomputed(m) => m
            .get(a.id)
            .and_then(|row| row.get(b.id))
            .copied()
            .ok_or_else(|| invalid(format!("no precomputed distance for ({}, {})", a.id, b.id))),
    }
}

/// Distances from every `from` record to every `to` record.
fn distance_matrix(metric: &Metric, from: &[Record], to: &[Record]) -> Result<Vec<Vec<f64>>> {
    if let Metric::RoadPath(Some(road)) = metric {
        let to_nodes: Vec<usize> = to.iter().map(|r| road.nearest_node(&r.coords)).collect();
        return Ok(from
            .iter()
            .map(|r| {
                let sp = road.shortest_paths_from(road.nearest_node(&r.coords));
                to_nodes.iter().map(|&v| sp[v]).collect()
            })
            .collect());
    }
    from.iter()
        .map(|a| to.iter().map(|b| distance(metric, a, b)).collect())
        .collect()
}

/// An immutable PMO instance.
///
/// `cost[i][k] = prior[i] * raw_cost[i][k]`; `edges` holds every `(i, j)` with
/// `i < j` and `dist[i][j] <= eta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdpInstance {
    records: Vec<Record>,
    outputs: Vec<Record>,
    metric: MetricKind,
    epsilon: f64,
    eta: f64,
    dist: Vec<Vec<f64>>,
    output_dist: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    raw_cost: Vec<Vec<f64>>,
    cost: Vec<Vec<f64>>,
    prior: Vec<f64>,
    provenance: String,
}

/// The pieces an instance is assembled from once distances and costs exist.
#[derive(Clone, Debug)]
pub struct InstanceParts {
    pub records: Vec<Record>,
    pub outputs: Vec<Record>,
    pub metric: MetricKind,
    pub epsilon: f64,
    pub eta: f64,
    pub dist: Vec<Vec<f64>>,
    pub output_dist: Vec<Vec<f64>>,
    pub raw_cost: Vec<Vec<f64>>,
    pub prior: Option<Vec<f64>>,
    pub provenance: String,
}

pub fn build_instance(
    records: Vec<Record>,
    outputs: Vec<Record>,
    metric: &Metric,
    epsilon: f64,
    eta: f64,
    cost_model: &CostModel,
    prior: Option<Vec<f64>>,
) -> Result<MdpInstance> {
    if records.is_empty() {
        return Err(invalid("empty record set"));
    }
    if outputs.is_empty() {
        return Err(invalid("empty output set"));
    }
    for r in records.iter().chain(&outputs) {
        r.validate()?;
    }
    let dist = distance_matrix(metric, &records, &records)?;
    let output_dist = distance_matrix(metric, &records, &outputs)?;
    let raw_cost = match cost_model {
        CostModel::Direct => output_dist.clone(),
        model => build_cost_matrix(&records, &outputs, model)?,
    };
    MdpInstance::from_parts(InstanceParts {
        records,
        outputs,
        metric: metric.kind(),
        epsilon,
        eta,
        dist,
        output_dist,
        raw_cost,
        prior,
        provenance: cost_model.describe(),
    })
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{name} must be {rows}x{cols}")));
    }
    if m.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid(format!("{name} entries must be finite and nonnegative")));
    }
    Ok(())
}

impl MdpInstance {
    pub fn from_parts(parts: InstanceParts) -> Result<Self> {
        let InstanceParts {
            records,
            outputs,
            metric,
            epsilon,
            eta,
            dist,
            output_dist,
            raw_cost,
            prior,
            provenance,
        } = parts;
        let n = records.len();
        let k = outputs.len();
        if n == 0 || k == 0 {
            return Err(invalid("instance needs at least one record and one output"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(invalid("epsilon must be positive and finite"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid("eta must be positive and finite"));
        }
        for (i, r) in records.iter().enumerate() {
            r.validate()?;
            if r.id != i {
                return Err(invalid(format!("record ids must be dense: found {} at {i}", r.id)));
            }
        }
        for (i, o) in outputs.iter().enumerate() {
            o.validate()?;
            if o.id != i {
                return Err(invalid(format!("output ids must be dense: found {} at {i}", o.id)));
            }
        }
        check_matrix("dist", &dist, n, n)?;
        check_matrix("output_dist", &output_dist, n, k)?;
        check_matrix("cost", &raw_cost, n, k)?;
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(invalid(format!("dist[{i}][{i}] must be zero")));
            }
            for j in 0..i {
                let (a, b) = (dist[i][j], dist[j][i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                    return Err(invalid(format!("dist not symmetric at ({j}, {i})")));
                }
            }
        }
        let prior = match prior {
            None => vec![1.0 / n as f64; n],
            Some(p) => {
                if p.len() != n {
                    return Err(invalid("prior length must equal the record count"));
                }
                if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(invalid("prior entries must be finite and nonnegative"));
                }
                if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(invalid("prior must sum to 1"));
                }
                p
            }
        };
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if dist[i][j] <= eta {
                    edges.push((i, j));
                }
            }
        }
        let cost = raw_cost
            .iter()
            .zip(&prior)
            .map(|(row, p)| row.iter().map(|c| p * c).collect())
            .collect();
        Ok(Self {
            records,
            outputs,
            metric,
            epsilon,
            eta,
            dist,
            output_dist,
            edges,
            raw_cost,
            cost,
            prior,
            provenance,
        })
    }

    /// Re-derives edges and the weighted cost, then re-checks every invariant.
    /// Used after deserializing.
    pub fn revalidated(self) -> Result<Self> {
        Self::from_parts(InstanceParts {
            records: self.records,
            outputs: self.outputs,
            metric: self.metric,
            epsilon: self.epsilon,
            eta: self.eta,
            dist: self.dist,
            output_dist: self.output_dist,
            raw_cost: self.raw_cost,
            prior: Some(self.prior),
            provenance: self.provenance,
        })
    }

    /// Same instance with a different privacy budget.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut copy = self.clone();
        copy.epsilon = epsilon;
        copy.revalidated()
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn k(&self) -> usize {
        self.outputs.len()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn outputs(&self) -> &[Record] {
        &self.outputs
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn output_dist(&self) -> &[Vec<f64>] {
        &self.output_dist
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Unweighted utility loss `c_{i,k}`.
    pub fn raw_cost(&self) -> &[Vec<f64>] {
        &self.raw_cost
    }

    /// Prior-weighted cost `p_i * c_{i,k}`.
    pub fn cost(&self) -> &[Vec<f64>] {
        &self.cost
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Multiplicative mDP bound `e^{eps * d}` for a direct edge.
    pub fn edge_bound(&self, i: usize, j: usize) -> f64 {
        (self.epsilon * self.dist[i][j]).exp()
    }

    /// Restriction to a subset of records (outputs unchanged). The prior is
    /// carried over unnormalized through the weighted cost.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        let records = subset
            .iter()
            .enumerate()
            .map(|(new, &old)| Record { id: new, ..self.records[old].clone() })
            .collect();
        let pick = |m: &[Vec<f64>]| subset.iter().map(|&i| m[i].clone()).collect::<Vec<_>>();
        let dist = subset
            .iter()
            .map(|&i| subset.iter().map(|&j| self.dist[i][j]).collect())
            .collect();
        // Keep cost = prior * raw_cost exactly by folding the prior into the raw cost
        // and using a uniform unit weight.
        let raw_cost: Vec<Vec<f64>> = pick(&self.cost);
        let m = subset.len() as f64;
        let scaled: Vec<Vec<f64>> = raw_cost.iter().map(|r| r.iter().map(|c| c * m).collect()).collect();
        Self::from_parts(InstanceParts {
            records,
            outputs: self.outputs.clone(),
            metric: self.metric,
            epsilon: self.epsilon,
            eta: self.eta,
            dist,
            output_dist: pick(&self.output_dist),
            raw_cost: scaled,
            prior: None,
            provenance: format!("{} (restricted to {} records)", self.provenance, subset.len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: usize, c: &[f64]) -> Record {
        Record::new(id, c.to_vec(), RecordKind::Synthetic)
    }

    fn line(xs: &[f64], eta: f64) -> MdpInstance {
        let rs: Vec<Record> = xs.iter().enumerate().map(|(i, &x)| rec(i, &[x])).collect();
        build_instance(rs.clone(), rs, &Metric::Euclidean, 1.0, eta, &CostModel::Direct, None).unwrap()
    }

    #[test]
    fn euclidean_examples() {
        let o = rec(0, &[0.0, 0.0, 0.0]);
        let p = rec(1, &[1.0, 2.0, 2.0]);
        assert_eq!(distance(&Metric::Euclidean, &o, &o).unwrap(), 0.0);
        assert_eq!(distance(&Metric::Euclidean, &p, &o).unwrap(), 3.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = rec(0, &[0.0, 0.0]);
        let b = rec(1, &[0.0, 0.0, 1.0]);
        assert!(matches!(distance(&Metric::Euclidean, &a, &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn road_path_without_network_is_config_error() {
        let a = rec(0, &[41.9, 12.5]);
        assert!(matches!(distance(&Metric::RoadPath(None), &a, &a), Err(Error::Config(_))));
    }

    #[test]
    fn haversine_matches_law_of_cosines() {
        let sw = rec(0, &[41.66, 12.24]);
        let ne = rec(1, &[42.10, 12.81]);
        let got = distance(&Metric::Haversine, &sw, &ne).unwrap();
        // Independent spherical-law-of-cosines evaluation.
        let (p1, l1, p2, l2) = (41.66f64.to_radians(), 12.24f64.to_radians(), 42.10f64.to_radians(), 12.81f64.to_radians());
        let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * (l2 - l1).cos();
        let oracle = EARTH_RADIUS_KM * c.clamp(-1.0, 1.0).acos();
        assert!((got - oracle).abs() / oracle < 1e-3, "{got} vs {oracle}");
        assert!(got > 60.0 && got < 75.0);
        assert_eq!(distance(&Metric::Haversine, &ne, &sw).unwrap(), got);
    }

    #[test]
    fn edge_threshold_is_inclusive() {
        assert_eq!(line(&[0.0, 1.5], 2.0).edges(), &[(0, 1)]);
        assert_eq!(line(&[0.0, 2.0], 2.0).edges(), &[(0, 1)]);
        assert_eq!(line(&[0.0, 1.5, 3.0], 2.0).edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn uniform_prior_by_default() {
        let inst = line(&[0.0, 1.0, 2.0, 5.0], 1.0);
        assert!(inst.prior().iter().all(|&p| (p - 0.25).abs() < 1e-15));
        assert!((inst.cost()[0][3] - 5.0 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let rs = vec![rec(0, &[f64::NAN])];
        assert!(build_instance(rs.clone(), rs, &Metric::Euclidean, 1.0, 1.0, &CostModel::Direct, None).is_err());
        assert!(build_instance(vec![], vec![rec(0, &[0.0])], &Metric::Euclidean, 1.0, 1.0, &CostModel::Direct, None).is_err());
        let rs = vec![rec(0, &[0.0])];
        assert!(build_instance(rs.clone(), rs.clone(), &Metric::Euclidean, 0.0, 1.0, &CostModel::Direct, None).is_err());
        assert!(build_instance(rs.clone(), rs, &Metric::Euclidean, 1.0, 1.0, &CostModel::Direct, Some(vec![0.5])).is_err());
    }

    #[test]
    fn restriction_keeps_weighted_cost() {
        let inst = line(&[0.0, 1.0, 2.0, 5.0], 1.0);
        let sub = inst.restrict(&[1, 3]).unwrap();
        assert_eq!(sub.n(), 2);
        for (a, &b) in [1usize, 3].iter().enumerate() {
            for k in 0..inst.k() {
                assert!((sub.cost()[a][k] - inst.cost()[b][k]).abs() < 1e-15);
            }
        }
        assert!(sub.edges().is_empty());
    }
}
