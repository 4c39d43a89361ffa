//! Optimal perturbation matrices under metric differential privacy.
//!
//! The secret records are partitioned along their mDP constraint graph and
//! the resulting linear program is solved by Benders decomposition. A
//! monolithic solve and the exponential mechanism serve as references.

// Dense numeric kernels read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod benders;
pub mod data;
pub mod error;
pub mod graph;
pub mod instance;
pub mod lp;
pub mod mech;
pub mod partition;
pub mod pmo;

pub use error::{Error, Result};
pub use graph::{build_graph, chain_rule_bound, shortest_paths, MdpGraph, PathDistances};
pub use instance::{build_instance, distance, MdpInstance, Metric, MetricKind, Record, RecordKind};
