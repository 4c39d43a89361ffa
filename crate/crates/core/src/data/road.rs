use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::dijkstra;
use crate::instance::{haversine_km, Record, RecordKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
}

/// Undirected road graph. Edge endpoints are node positions, not file ids.
#[derive(Clone, Debug)]
pub struct RoadNetwork {
    nodes: Vec<RoadNode>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Deserialize)]
struct NodeRow {
    id: u64,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    u: u64,
    v: u64,
    length_km: Option<f64>,
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

impl RoadNetwork {
    /// Builds a network; duplicate edges keep the shortest length and a
    /// missing length defaults to the haversine distance of the endpoints.
    pub fn new(nodes: Vec<RoadNode>, edges: impl IntoIterator<Item = (u64, u64, Option<f64>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (pos, n) in nodes.iter().enumerate() {
            if !(n.lat.is_finite() && n.lon.is_finite()) {
                return Err(Error::Validation(format!("node {} has non-finite coordinates", n.id)));
            }
            if index.insert(n.id, pos).is_some() {
                return Err(Error::Validation(format!("duplicate node id {}", n.id)));
            }
        }
        let mut best: HashMap<(usize, usize), f64> = HashMap::new();
        for (u, v, len) in edges {
            let (&a, &b) = match (index.get(&u), index.get(&v)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Validation(format!("edge ({u}, {v}) references a missing node"))),
            };
            if a == b {
                continue;
            }
            let len = match len {
                Some(l) => l,
                None => haversine_km(&[nodes[a].lat, nodes[a].lon], &[nodes[b].lat, nodes[b].lon]),
            };
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::Validation(format!("edge ({u}, {v}) has non-positive length")));
            }
            let key = (a.min(b), a.max(b));
            let slot = best.entry(key).or_insert(len);
            *slot = slot.min(len);
        }
        let mut edges: Vec<(usize, usize, f64)> = best.into_iter().map(|((a, b), l)| (a, b, l)).collect();
        edges.sort_by_key(|e| (e.0, e.1));
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b, l) in &edges {
            adjacency[a].push((b, l));
            adjacency[b].push((a, l));
        }
        Ok(Self { nodes, edges, adjacency })
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn nearest_node(&self, coords: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = haversine_km(coords, &[n.lat, n.lon]);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    /// Road path lengths in km from one node; `inf` where unreachable.
    pub fn shortest_paths_from(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adjacency, source)
    }

    pub fn records(&self) -> Vec<Record> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Record::new(i, vec![n.lat, n.lon], RecordKind::GeoRoad))
            .collect()
    }
}

/// Reads `nodes.csv` (`id,lat,lon`) and `edges.csv` (`u,v[,length_km]`).
pub fn load_road_network(nodes_path: impl AsRef<Path>, edges_path: impl AsRef<Path>) -> Result<RoadNetwork> {
    let mut nodes = Vec::new();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(nodes_path)?;
    for row in rdr.deserialize::<NodeRow>() {
        let row = row.map_err(|e| Error::Parse { line: csv_line(&e), msg: e.to_string() })?;
        nodes.push(RoadNode { id: row.id, lat: row.lat, lon: row.lon });
    }
    let mut edges = Vec::new();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(edges_path)?;
    for row in rdr.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| Error::Parse { line: csv_line(&e), msg: e.to_string() })?;
        edges.push((row.u, row.v, row.length_km));
    }
    RoadNetwork::new(nodes, edges)
}
