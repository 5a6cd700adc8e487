//! Rotation-invariant point cloud analysis.
//!
//! The crate turns a point cloud into a per-neighborhood descriptor block that
//! is unchanged by any rotation of the input, and embeds those blocks with a
//! three-layer hierarchical network whose region relation convolutions gate
//! local features with globally regressed weights.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the scalar.

// Negated comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geom;
pub mod median;
pub mod net;
pub mod nn;
pub mod repr;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Point64 = geom::Point3<f64>;
pub type Point32 = geom::Point3<f32>;
pub type Cloud64 = geom::PointCloud<f64>;
pub type Cloud32 = geom::PointCloud<f32>;
pub type Rotation64 = geom::RotationMatrix<f64>;
pub type Rotation32 = geom::RotationMatrix<f32>;
pub type RiTensor64 = repr::RiTensor<f64>;
pub type RiTensor32 = repr::RiTensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Tensor32 = nn::Tensor<f32>;
pub type NetworkParams64 = net::NetworkParams<f64>;
pub type NetworkParams32 = net::NetworkParams<f32>;
pub type Geometry64 = net::CloudGeometry<f64>;
pub type Trainer64 = net::Trainer<f64>;
