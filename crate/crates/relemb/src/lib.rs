//! Relevance-based word and app embeddings.
//!
//! The pipeline in this crate turns a corpus of mobile-app descriptions into
//! dense embeddings by way of retrieval: an Okapi BM25 index produces a
//! sparse relevance representation per vocabulary term, a small feed-forward
//! encoder (or autoencoder / truncated SVD / PCA) compresses those rows, and
//! the results drive query expansion, app recommendation, categorization and
//! clustering.

pub mod categorize;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod index;
pub(crate) mod linalg;
pub mod neural;
pub mod pipeline;
pub mod reduce;
pub mod reprs;
pub mod sparse;
pub mod storage;
pub mod synth;
pub mod tasks;

pub use error::{Error, Result};
