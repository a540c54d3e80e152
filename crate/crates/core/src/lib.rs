//! Signed-attention graph convolution (GGCN) for node classification, with
//! periodic transfer-entropy corrections on heterophilic high-degree nodes.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common instantiations.

pub mod autodiff;
pub mod control;
pub mod data;
pub mod error;
pub mod graph;
pub mod model;
pub mod scalar;
pub mod te;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph32 = graph::Graph<f32>;
pub type Graph64 = graph::Graph<f64>;
pub type Ggcn32 = model::Ggcn<f32>;
pub type Ggcn64 = model::Ggcn<f64>;
pub type SeriesPair32 = te::SeriesPair<f32>;
pub type SeriesPair64 = te::SeriesPair<f64>;
pub type KdTree32 = te::KdTree<f32>;
pub type KdTree64 = te::KdTree<f64>;
