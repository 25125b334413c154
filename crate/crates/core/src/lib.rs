//! Graph contrastive learning for implicit-feedback recommendation.
//!
//! The crate implements a LightGCN-style propagation backbone over a bipartite
//! user-item graph, trained with Bayesian personalized ranking plus a symmetric
//! contrastive loss over two stochastically augmented graph views. Alongside
//! the model it provides betweenness-based edge importance analysis, noisy-view
//! diagnostics, ranking evaluation, and executable checks of the noise-tolerance
//! theory behind the symmetric loss.

pub mod analysis;
pub mod augmentation;
pub mod centrality;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod losses;
pub mod matrix;
pub mod rng;
pub mod synth;
pub mod theory;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{InteractionGraph, NormalizedAdjacency};
pub use matrix::DenseMatrix;
