use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("player index {index} out of range for {n_players} players")]
    PlayerIndex { index: usize, n_players: usize },

    #[error("state is {got} players wide, expected {expected}")]
    StateWidth { got: usize, expected: usize },

    #[error("state bits {bits:#b} set above player {n_players}")]
    StateBits { bits: u64, n_players: usize },

    #[error("invalid state label {0:?}: expected only 'C' and 'D'")]
    StateLabel(String),

    #[error("{what}: {n_players} players exceeds the limit of {limit}")]
    TooManyPlayers {
        what: &'static str,
        n_players: usize,
        limit: usize,
    },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid player parameters: {0}")]
    InvalidParams(String),

    #[error("{0} requires a finite selection intensity")]
    InfiniteBeta(&'static str),

    #[error("strong-selection limit is undefined for delta = 0")]
    ZeroDelta,

    #[error(
        "game is not additive for player {player}: contexts {context_a} and {context_b} \
         give payoff differences {diff_a} and {diff_b}"
    )]
    NotAdditive {
        player: usize,
        context_a: String,
        context_b: String,
        diff_a: f64,
        diff_b: f64,
    },

    #[error("{0} is not a public goods game")]
    NotPgg(&'static str),

    #[error("mutation rate {0} outside [0, 1/2]")]
    MutationOutOfRange(f64),

    #[error("probability {0} outside [0, 1]")]
    Probability(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("linear system is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error(
        "power iteration did not converge in {iterations} iterations (last L1 step {last_step:e})"
    )]
    NotConverged { iterations: usize, last_step: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
