//! Opinion dynamics with a similarity-driven recommender: ratings ingestion,
//! run artifacts, bound sweeps and the `odrs` command line.

pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod export;
pub mod sweep;

pub use odrs_core as core;
