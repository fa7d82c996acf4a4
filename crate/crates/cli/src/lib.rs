//! Library behind the `introspect` binary: configuration, the `solve`,
//! `simulate`, `check` and `figure` commands, and their output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;

pub use commands::{cmd_check, cmd_simulate, cmd_solve, Report};
pub use config::{LoadedConfig, Method, Overrides, RunConfig};
pub use error::{exit, CliError, Result};
pub use figures::{cmd_figure, FigureName};
