//! Three-way classification of a scientific article corpus.
//!
//! Articles are classified by their declared keywords, by the vocabulary of
//! their citation neighborhood, and by latent topics of their full text. Each
//! classification is aggregated into per-country semantic profiles which are
//! clustered with Ward linkage, and pairs of classifications are compared with
//! flow matrices, bootstrap-calibrated correlations and cross-induced
//! modularity.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod citations;
pub mod classification;
pub mod complementarity;
pub mod config;
pub mod corpus;
pub mod countries;
pub mod error;
pub mod geo;
pub mod keywords;
pub mod louvain;
pub mod pipeline;
pub mod rng;
pub mod store;
pub mod text;
pub mod topics;

pub use classification::{Classification, Method};
pub use config::PipelineConfig;
pub use corpus::{Article, CitationRecord, Corpus};
pub use error::{Error, Result};
