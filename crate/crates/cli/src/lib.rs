//! Library side of the `rmst` command-line tool: CSV ingestion, the
//! scenario config grammar, and the `analyze`, `simulate` and `plan`
//! commands as plain functions returning serializable reports.

pub mod analyze;
pub mod config;
pub mod data;
pub mod error;
pub mod plan;
pub mod simulate;

pub use error::{CliError, Result};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;
