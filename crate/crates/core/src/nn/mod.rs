//! Minimal dense network engine: shared per-point MLPs, max pooling,
//! softmax cross-entropy and Adam, with hand-written reverse passes.

mod adam;
mod loss;
mod mlp;
mod pool;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use loss::softmax_cross_entropy;
pub use mlp::{glorot_uniform, Activation, Dense, Mlp, MlpCache};
pub use pool::{max_pool_backward, max_pool_neighbors, PoolIndices};
pub use tensor::Tensor;
