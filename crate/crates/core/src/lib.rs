//! Weighted similarity graphs over chord-sequence corpora, node embeddings
//! learned from biased random walks, and collective classification of node
//! labels.
//!
//! The pipeline runs corpus → chord embeddings → similarity graph → walks →
//! node embeddings → evaluation, with label propagation working directly on
//! the graph.

pub mod chord2vec;
pub mod classify;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod graph;
pub mod seed;
pub mod synthetic;
pub mod vectors;
pub mod walk;

pub use error::{Error, Result};
