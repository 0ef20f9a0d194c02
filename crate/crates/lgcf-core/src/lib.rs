//! Lorentz graph collaborative filtering.
//!
//! Users and items live on the Lorentz hyperboloid `<x,x>_L = -1`. Graph
//! convolution maps embeddings to the Klein ball, takes the Einstein
//! midpoint over each node's neighborhood, and maps back. Preferences are
//! scored by geodesic distance and the embedding table is trained with a
//! margin ranking loss under Riemannian SGD.
//!
//! The crate is `no_std` + `alloc`; all IO lives in the companion `lgcf`
//! crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod model;
pub mod optimizer;
pub mod tape;

pub use dataset::{BipartiteGraph, InteractionSet, Split};
pub use geometry::{KleinPoint, LorentzPoint, TangentVector};
pub use model::{Activation, ConvMode, EmbeddingMatrix, LayerStack, ModelConfig};
pub use optimizer::{OptimConfig, SparseGrad, TrainResult};
