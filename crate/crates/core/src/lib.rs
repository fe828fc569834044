//! Road-type classification on dual road networks.
//!
//! Primal road networks are parsed and turned into a dual graph with roads as
//! nodes. Per-road feature vectors combine geometry with image-derived blocks,
//! and a two-layer GCN or GraphSAGE model is trained on them transductively.

pub mod error;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod hash;
pub mod nn;
pub mod training;

pub use error::{Error, Result};
pub use features::{BlockKind, EmbeddingTable, FeatureMatrix, ImageTile, Raster};
pub use gnn::{GnnModel, SampledBlock, Variant};
pub use graph::{PrimalGraph, RoadGraph, Split, SplitSpec, UturnPolicy};
pub use training::{Metrics, RunRecord, TrainConfig};
