//! Heterogeneous graph similarity learning.
//!
//! - [`hetgraph`]: typed graph model, JSON I/O, one-hot features, typed WL.
//! - [`hged`]: exact heterogeneous graph edit distance.
//! - [`dataset`]: synthetic sources, BFS sampling, labeled pair datasets.
//! - [`tensor`]: define-by-run reverse-mode autodiff and AdamW.
//! - [`model`]: the two-tier type-aligned matching network.
//! - [`harness`]: training, evaluation metrics, retrieval and timing.

pub mod hetgraph;
pub mod hged;
pub mod dataset;
pub mod tensor;
pub mod model;
pub mod harness;

pub use hetgraph::{Edge, HetGraph, TypeVocab};
