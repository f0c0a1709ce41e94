//! Ingestion, storage, export and serving for `rmcurve-core`.

pub mod config;
pub mod export;
pub mod ingest;
pub mod service;
pub mod store;
