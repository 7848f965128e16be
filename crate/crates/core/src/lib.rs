//! Semi-supervised node classification with higher-order cliques.
//!
//! The pipeline: build or load a graph, enumerate a clique set (edges, all
//! cliques, maximal cliques, or maximal cliques augmented to even out node
//! participation), initialize label distributions by random walks, and
//! minimize a clique-based objective over the probability simplices.

pub mod augmax;
pub mod clique;
pub mod error;
pub mod expected;
pub mod field;
pub mod graph;
pub mod harness;
pub mod objective;
pub mod ppm;
pub mod rw;

pub use error::{Error, Result};
pub use field::ProbabilityField;
pub use graph::{Graph, LabeledSets, NodeId};
