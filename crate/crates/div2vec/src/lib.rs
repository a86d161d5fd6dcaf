//! Random-walk node embeddings with a recommendation-diversity toolkit.
//!
//! The pipeline: ingest ratings into a bipartite user-item graph
//! ([`graph`], [`ratings`]), sample walk corpora under uniform,
//! second-order (node2vec) or degree-biased (div2vec) strategies
//! ([`walker`]), train skip-gram embeddings ([`embed`]), combine node
//! vectors into edge features ([`edgeops`]), fit a link-prediction MLP
//! and score it with AUC ([`predictor`]), and measure recommendation
//! diversity with coverage, entropy-diversity and intra-list similarity
//! ([`diversity`]). File formats live in [`io`]; [`synth`] generates
//! deterministic benchmark data.

pub mod diversity;
pub mod edgeops;
pub mod embed;
pub mod error;
pub mod features;
pub mod graph;
pub mod io;
pub mod predictor;
pub mod ratings;
pub mod synth;
pub mod vecmath;
pub mod walker;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, Partition};
