//! Graph-based feature extraction for recommender datasets.
//!
//! Tables are turned into a heterogeneous graph, every sub-graph scheme that keeps the
//! predicted relationship is enumerated, and graph metrics are extracted for each
//! `(source, target)` pair into per-fold feature tables.

pub mod binning;
pub mod dataset;
pub mod error;
pub mod features;
pub mod graph;
pub mod metrics;
pub mod pipeline;
pub mod schema;
pub mod scheme;
pub mod toy;

pub use error::{Error, Result};
