//! File formats, reports and the command pipeline around
//! [`transparency_core`].

pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod table_io;

pub use error::{CliError, Result};
pub use pipeline::{OutputFormat, RunConfig};
