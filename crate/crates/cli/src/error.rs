use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const SCHEMA: i32 = 2;
    pub const NOT_ADDITIVE: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config does not match the schema:\n{0}")]
    Schema(String),

    #[error("invalid config: {0}")]
    Config(String),

    /// Closed form requested for a game with a counterexample to additivity.
    #[error(
        "game not additive: player {player} has payoff difference {diff_a} in context {context_a} \
         but {diff_b} in context {context_b}"
    )]
    NotAdditive {
        player: usize,
        context_a: String,
        context_b: String,
        diff_a: f64,
        diff_b: f64,
    },

    #[error("solver failed: {0}")]
    Solver(introspection::Error),

    #[error(transparent)]
    Model(introspection::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("writing output failed: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Config(_) | CliError::Model(_) => exit::SCHEMA,
            CliError::NotAdditive { .. } => exit::NOT_ADDITIVE,
            CliError::Solver(_) => exit::NOT_CONVERGED,
            CliError::Io { .. } | CliError::Output(_) => exit::FAILURE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<introspection::Error> for CliError {
    fn from(e: introspection::Error) -> Self {
        use introspection::Error as E;
        match e {
            // reported with 1-based player numbers, like everything user-facing
            E::NotAdditive {
                player,
                context_a,
                context_b,
                diff_a,
                diff_b,
            } => CliError::NotAdditive {
                player: player + 1,
                context_a,
                context_b,
                diff_a,
                diff_b,
            },
            E::NotConverged { .. } | E::Singular { .. } => CliError::Solver(e),
            E::Csv(msg) => CliError::Output(msg),
            other => CliError::Model(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
