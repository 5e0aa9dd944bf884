//! Local equivariant layers: subgraph stacks, size buckets, reconstruction,
//! readout and the classification head.

mod bucketing;
mod checkpoint;
mod config;
mod linear;
mod model;
mod mpnn;
mod op;
mod repspec;
mod structure;
mod weights;

pub use bucketing::{build_bucketing, SizeBucketing};
pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{basis_count, LayerConfig, ModelConfig, Neighbourhood};
pub use linear::subgraph_linear;
pub use mpnn::MaxPoolMpnn;
pub use model::{mlp_head, GraphFeatures, Model, ParamVars};
pub use repspec::{FeatureLayout, RepSpec, MAX_ORDER};
pub use structure::{Batch, CellIndex, NeighbourhoodPlan, PreparedGraph};
pub use weights::{bias_elements, BiasBlock, DenseLayer, EquivariantLayerWeights, LayerLayout, WeightBlock};
