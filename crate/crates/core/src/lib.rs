//! Cross-camera complex activity detection over detection traces.

pub mod rules;
pub mod ingest;
pub mod oracle;
pub mod tracker;
pub mod spatial;
pub mod matcher;
pub mod metrics;
pub mod par;
pub mod pipeline;
