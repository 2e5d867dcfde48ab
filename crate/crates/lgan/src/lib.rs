//! Line-graph aggregation networks (LGAN) and the refinement tests that
//! bound their expressive power.
//!
//! * [`graph`]: graphs, line graphs, ego networks, TU datasets, small-graph
//!   enumeration and exhaustive isomorphism.
//! * [`refine`]: 1-WL, set-based 2-WL / 2-FWL and the line-graph hash.
//! * [`autodiff`]: a small reverse-mode tape over dense matrices.
//! * [`model`]: the trainable network.
//! * [`train`]: stratified cross-validation.
//! * [`attribution`]: Integrated-Gradients edge scores.
//! * [`bench`]: message counting and per-layer timing.

pub mod attribution;
pub mod autodiff;
pub mod bench;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod refine;
pub mod train;

pub use graph::{Dataset, Graph, GraphSpec, LineGraph};
pub use matrix::Matrix;
pub use refine::{distinguishable, Coloring};
