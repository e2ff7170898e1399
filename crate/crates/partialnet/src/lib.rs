//! Individual-centered partial-information network analysis.
//!
//! A node in an undirected graph rarely sees the whole network; at
//! knowledge depth two it knows exactly the edges on paths of length at
//! most two starting from itself. This crate builds that perceived
//! network, analyzes the spectral structure of its low-rank signal
//! term, and recovers stochastic-block-model communities from a single
//! anchor's partial view with a divide-and-merge clustering pipeline.
//!
//! Modules:
//! - [`graph`]: adjacency matrices, SBM specification and sampling, edge-list IO.
//! - [`view`]: perceived networks ("based on" / "within" a knowledge depth).
//! - [`linalg`]: dense eigensolvers and SVD kernels.
//! - [`spectral`]: the signal matrix of a perceived network and its eigenstructure.
//! - [`detect`]: k-means, the group-wise clustering step, cluster merging, baselines.
//! - [`experiments`]: simulation grids, verification sweeps, case studies.
//! - [`report`]: CSV/JSON emission.

pub mod data;
pub mod detect;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod linalg;
pub mod report;
pub mod spectral;
pub mod view;

pub use error::{Error, Result};
