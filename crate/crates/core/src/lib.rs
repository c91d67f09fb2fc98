//! Sparse binary path representations for machine learning on road networks.
//!
//! The pipeline runs: build a [`graph::Graph`], snap and route trips into a
//! [`ingest::PathDataset`], encode each path under one of six
//! [`encode::Representation`]s, then train and cross-validate baseline,
//! random-forest and multilayer-perceptron regressors ([`models`], [`eval`]).

pub mod encode;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod models;
pub mod rng;

pub use error::{Error, Result};
