//! Instance files, surface grids, property checks and the commands behind the
//! `convext` binary.

pub mod check;
pub mod commands;
pub mod error;
pub mod instance_file;
pub mod report;
pub mod surface;

pub use error::{CliError, CliResult};
