//! File formats and command implementations behind the `dcf` binary.

pub mod commands;
pub mod error;
pub mod io;
pub mod report;
pub mod svg;

pub use error::CliError;
pub use io::{load_sample, read_matrix, write_matrix, CsvSampleFile};
pub use report::{ResultDocument, SimulationMetadata, FORMAT_VERSION};
