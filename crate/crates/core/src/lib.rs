//! Character-level demographic classification from full names, with a
//! fairness-audit toolkit.
//!
//! The crate covers the whole pipeline: corpus ingestion and normalization,
//! majority-vote deduplication, stratified splitting, TF-IDF character
//! n-gram and character-sequence features, three from-scratch classifier
//! families (logistic regression, char-CNN, char-LSTM) trained with Adam,
//! an evaluation harness with cross-dataset protocols and error buckets,
//! rate-limited clients for commercial gender APIs, and representation /
//! voice / trend metrics for demographic audits.

pub mod baselines;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fairness;
pub mod features;
pub mod models;

pub use error::{Error, ErrorCategory, Result};
