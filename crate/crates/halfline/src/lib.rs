//! File formats, a threaded executor and the command-line front end for `halfline-core`.

pub mod cli;
pub mod exec;
pub mod output;
mod settings;

pub use exec::Threads;
pub use output::CsvTable;

/// Version string written into every output header.
pub const ARTIFACT_VERSION: &str = concat!("halfline ", env!("CARGO_PKG_VERSION"));
