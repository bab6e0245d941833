//! Temporal event forecasting over evolutionary knowledge graphs.
//!
//! The pipeline ingests timestamped user interactions and a static product
//! graph, cuts time into steps, retrieves a few subgraphs per user and step
//! (personalized PageRank and randomized k-hop), encodes them with graph
//! attention, combines steps with causal temporal attention, and trains the
//! result with WARP ranking losses alongside a TransR completion loss.

pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod numcore;
pub mod rng;
pub mod sampler;
pub mod selftest;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
