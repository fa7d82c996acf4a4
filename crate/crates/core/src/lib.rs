//! Introspection dynamics with mutation on binary-action N-player games.
//!
//! A population of `N` players each holds one of two actions, cooperate (`C`)
//! or defect (`D`). At each step one player is picked uniformly at random,
//! compares their payoff with the payoff they would get under the other action,
//! and switches according to a personal Fermi rule, perturbed by per-player
//! mutation towards either action.
//!
//! The crate computes the long-run behaviour of this chain three ways:
//!
//! * [`closed_form`]: per-player cooperation probabilities and the product
//!   measure, valid for additive games (see [`additivity`]).
//! * [`exact`]: the full `2^N`-state transition matrix and its stationary
//!   distribution.
//! * [`simulate`]: seeded Monte Carlo replicates of the chain.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, which is what every caller in
//! this workspace uses; the `*F32` aliases exist for memory-bound sweeps.

pub mod additivity;
pub mod closed_form;
mod error;
pub mod exact;
pub mod model;
mod scalar;
pub mod simulate;

pub use error::{Error, Result};
pub use scalar::Real;

pub use exact::SolveMethod;
pub use model::ActionState;
pub use simulate::{InitialState, SimulationConfig, SimulationResult, Summary};

pub type GameSpec = model::GameSpec<f64>;
pub type PlayerParams = model::PlayerParams<f64>;
pub type PopulationSpec = model::PopulationSpec<f64>;
pub type AdditivityReport = additivity::AdditivityReport<f64>;
pub type PlayerAdditivity = additivity::PlayerAdditivity<f64>;
pub type TransitionMatrix = exact::TransitionMatrix<f64>;
pub type StationaryDistribution = exact::StationaryDistribution<f64>;
pub type PlayerClosedForm = closed_form::PlayerClosedForm<f64>;
pub type BalanceLine = closed_form::BalanceLine<f64>;

pub type GameSpecF32 = model::GameSpec<f32>;
pub type PlayerParamsF32 = model::PlayerParams<f32>;
pub type PopulationSpecF32 = model::PopulationSpec<f32>;
pub type StationaryDistributionF32 = exact::StationaryDistribution<f32>;
