//! Utility-loss models turning (secret, perturbed) pairs into `c_{i,k}`.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::road::RoadNetwork;
use crate::error::{invalid, Result};
use crate::instance::{euclidean, Record};

/// How path distance `pd` is measured for the destination model.
#[derive(Clone, Debug)]
pub enum PathSource {
    /// Straight-line distance on the record coordinates (grid maps).
    Euclidean,
    /// Shortest road path; records snap to their nearest road node.
    Road(Arc<RoadNetwork>),
}

#[derive(Clone, Debug)]
pub enum CostModel {
    /// `c_{i,k} = d(r_i, o_k)` under the instance metric.
    Direct,
    /// `c_{i,k} = sum_dest p_dest |pd(r_i, dest) - pd(o_k, dest)|`.
    PathToDestinations {
        /// Indices into the secret records.
        destinations: Vec<usize>,
        p_dest: Vec<f64>,
        source: PathSource,
    },
}

impl CostModel {
    /// Destination model with `count` destinations drawn uniformly without
    /// replacement from `n` records, uniform `p_dest`.
    pub fn sampled_destinations(n: usize, count: usize, seed: u64, source: PathSource) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut destinations = sample(&mut rng, n, count.min(n)).into_vec();
        destinations.sort_unstable();
        let p = 1.0 / destinations.len() as f64;
        let p_dest = vec![p; destinations.len()];
        CostModel::PathToDestinations { destinations, p_dest, source }
    }

    pub fn describe(&self) -> String {
        match self {
            CostModel::Direct => "direct-distance".into(),
            CostModel::PathToDestinations { destinations, source, .. } => {
                let src = match source {
                    PathSource::Euclidean => "euclidean",
                    PathSource::Road(_) => "road",
                };
                format!("path-distance-to-destinations({} destinations, {src} pd)", destinations.len())
            }
        }
    }
}

/// Cost matrix `c_{i,k}` for a destination model. For `Direct`, callers use
/// the metric distances directly (see `build_instance`); here it falls back
/// to Euclidean coordinates.
pub fn build_cost_matrix(records: &[Record], outputs: &[Record], model: &CostModel) -> Result<Vec<Vec<f64>>> {
    let (destinations, p_dest, source) = match model {
        CostModel::Direct => {
            return Ok(records
                .iter()
                .map(|r| outputs.iter().map(|o| euclidean(&r.coords, &o.coords)).collect())
                .collect())
        }
        CostModel::PathToDestinations { destinations, p_dest, source } => (destinations, p_dest, source),
    };
    if destinations.is_empty() || destinations.len() != p_dest.len() {
        return Err(invalid("destination list and p_dest must be non-empty and the same length"));
    }
    if (p_dest.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("p_dest must sum to 1"));
    }
    if let Some(&d) = destinations.iter().find(|&&d| d >= records.len()) {
        return Err(invalid(format!("destination {d} is not a record index")));
    }

    // pd[dest][point] for secret records then outputs
    let pd: Vec<(Vec<f64>, Vec<f64>)> = match source {
        PathSource::Euclidean => destinations
            .iter()
            .map(|&d| {
                let dc = &records[d].coords;
                (
                    records.iter().map(|r| euclidean(&r.coords, dc)).collect(),
                    outputs.iter().map(|o| euclidean(&o.coords, dc)).collect(),
                )
            })
            .collect(),
        PathSource::Road(road) => {
            let rnodes: Vec<usize> = records.iter().map(|r| road.nearest_node(&r.coords)).collect();
            let onodes: Vec<usize> = outputs.iter().map(|o| road.nearest_node(&o.coords)).collect();
            destinations
                .iter()
                .map(|&d| {
                    let sp = road.shortest_paths_from(rnodes[d]);
                    (rnodes.iter().map(|&v| sp[v]).collect(), onodes.iter().map(|&v| sp[v]).collect())
                })
                .collect()
        }
    };

    let mut cost = vec![vec![0.0; outputs.len()]; records.len()];
    for (i, row) in cost.iter_mut().enumerate() {
        // Destinations unreachable from r_i or from any output are dropped for
        // this record and the remaining weights renormalized.
        let usable: Vec<usize> = (0..destinations.len())
            .filter(|&t| pd[t].0[i].is_finite() && pd[t].1.iter().all(|v| v.is_finite()))
            .collect();
        if usable.len() < destinations.len() {
            log::warn!(
                "record {i}: {} of {} destinations unreachable, renormalizing p_dest",
                destinations.len() - usable.len(),
                destinations.len()
            );
        }
        let total: f64 = usable.iter().map(|&t| p_dest[t]).sum();
        if total <= 0.0 {
            log::warn!("record {i}: no reachable destination, cost row set to zero");
            continue;
        }
        for (k, c) in row.iter_mut().enumerate() {
            *c = usable
                .iter()
                .map(|&t| p_dest[t] / total * (pd[t].0[i] - pd[t].1[k]).abs())
                .sum();
        }
    }
    Ok(cost)
}
