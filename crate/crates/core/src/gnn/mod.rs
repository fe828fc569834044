//! Message-passing layers, neighborhood sampling and the two-layer model.

mod aggregate;
mod model;
mod sampling;
#[cfg(test)]
pub(crate) mod test_util;

pub use aggregate::{gcn_layer_forward, mean_aggregate, sage_layer_forward};
pub use model::{ForwardCache, GnnConfig, GnnGrads, GnnModel, Variant};
pub use sampling::{full_block, sample_neighborhood, sample_neighborhood_with, BlockLayer, SampledBlock, SmallDegree};
