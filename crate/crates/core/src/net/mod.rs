//! Three-layer hierarchical network built from region relation convolutions.
//!
//! Geometry (sampling, grouping, descriptors, relation matrices) is computed
//! once per cloud in [`CloudGeometry`] and never differentiated; the learned
//! part runs on top of it with an explicit forward cache and reverse pass.

mod config;
mod model;
mod params;
mod persist;
mod train;

pub use config::NetworkConfig;
pub use model::{
    classify, cosine_similarity, hierarchical_forward, region_relation_conv, relation_weight, retrieve, CloudGeometry,
    ForwardCache, RrcCache,
};
pub use params::{NetworkParams, RrcParams};
pub use persist::{read_model, write_model, MODEL_HEADER};
pub use train::{embed, predict, Trainer};
