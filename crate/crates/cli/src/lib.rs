//! Library side of the `xmeter` command: argument types, run configuration,
//! dataset I/O, the external-model adapter and report writers.

pub mod args;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod external;
pub mod output;

pub use commands::{run, Outcome};
pub use error::{CliError, CliResult};
