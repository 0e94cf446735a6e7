//! Tsetlin Machine intrusion-detection engine for IoMT network-flow records.
//!
//! The crate covers the full path from flow-feature CSVs to an interpretable
//! classifier: ingestion against per-scenario schemas, cleaning,
//! standardization, quantile one-hot binarization, SMOTE balancing, the
//! Tsetlin Machine itself, evaluation with stratified cross-validation,
//! microsecond-scale latency measurement, and explainability exports (vote
//! scores, clause activation maps, rendered rules).

pub mod baseline;
pub mod binarizer;
pub mod error;
pub mod explain;
pub mod ingest;
pub mod metrics;
pub mod model_io;
pub mod pipeline;
pub mod preprocess;
pub mod tm;

pub use error::{Error, Result};
