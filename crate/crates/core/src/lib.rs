//! Predicting circRNA-disease associations with a two-layer message-passing
//! graph convolution network over a heterogeneous similarity graph.
//!
//! Pipeline: [`ingest`] loads sequences and known associations,
//! [`alignment`] and [`similarity`] build circRNA and disease similarity
//! matrices, [`graph`] thresholds them into a graph, [`gcn`] trains the
//! network and [`eval`] runs cross-validation and ranking.

pub mod alignment;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod graph;
pub mod ingest;
pub mod similarity;

pub use alignment::{nw_score, sequence_similarity, ScoringScheme, SimilarityMatrix};
pub use error::{Error, Result};
pub use eval::{cross_validate, Dataset, EvalConfig};
pub use gcn::{ModelParams, TrainConfig};
pub use graph::{build_graph, Graph, GraphConfig};
pub use ingest::{AssociationMatrix, SequenceSet, SyntheticSpec};
