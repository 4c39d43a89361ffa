//! Dataset generators, loaders, cost models and file formats.

pub mod cost;
pub mod embeddings;
pub mod files;
pub mod generate;
pub mod road;

pub use cost::{build_cost_matrix, CostModel, PathSource};
pub use embeddings::load_embeddings;
pub use generate::{generate_grid, generate_synthetic, subsample};
pub use road::{load_road_network, RoadNetwork, RoadNode};
