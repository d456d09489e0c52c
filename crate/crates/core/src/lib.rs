// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod benchmark;
pub mod cli;
pub mod config;
pub mod embed;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod policy;
pub mod retrieval;
pub mod rng;
pub mod stats;
pub mod text;
pub mod trajectories;

pub use error::{Error, Result};
pub use graph::{Edge, EdgeType, Graph, GraphBuilder, Node, NodeId};
