//! Trend prediction on timestamped bipartite user–object networks.
//!
//! The pipeline is: [`ingest`] raw interaction logs into day-indexed edges,
//! build an immutable [`tempgraph::TemporalGraph`], score every candidate
//! object with one of the [`predictors`], and compare the predicted ranking
//! with the realised future ranking using [`metrics`]. The [`experiment`]
//! module runs the date-sampling and parameter-sweep protocol on top of that,
//! and [`synth`] generates growth networks with aging plus the brute-force
//! oracles used by the test suites.

pub mod error;
pub mod experiment;
pub mod ids;
pub mod ingest;
pub mod metrics;
pub mod predictors;
pub mod report;
pub mod synth;
pub mod tempgraph;

pub use error::{Error, Result};
pub use ids::{Day, ObjectId, TemporalEdge, UserId};
pub use tempgraph::{Snapshot, TemporalGraph};
