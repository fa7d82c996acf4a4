//! Per-player additivity ("equal gains from switching") detection.
//!
//! A game is additive for player `i` when `payoff_difference(i, a)` depends
//! only on `a_i`. By antisymmetry it is enough to scan the `2^(N-1)` contexts
//! with `a_i = 0`; the constant read there is `delta_i`.

use rayon::prelude::*;

use crate::model::{ActionState, GameSpec};
use crate::{Error, Real, Result};

/// Relative tolerance used when none is given.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest game scanned exhaustively.
pub const MAX_ADDITIVITY_PLAYERS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum PlayerAdditivity<T> {
    Additive {
        delta: T,
    },
    /// Two contexts (player's own bit 0 in both) whose payoff differences disagree.
    NotAdditive {
        context_a: ActionState,
        context_b: ActionState,
        diff_a: T,
        diff_b: T,
    },
}

impl<T: Real> PlayerAdditivity<T> {
    pub fn delta(&self) -> Option<T> {
        match self {
            PlayerAdditivity::Additive { delta } => Some(*delta),
            PlayerAdditivity::NotAdditive { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityReport<T> {
    pub per_player: Vec<PlayerAdditivity<T>>,
}

impl<T: Real> AdditivityReport<T> {
    pub fn game_additive(&self) -> bool {
        self.per_player
            .iter()
            .all(|p| matches!(p, PlayerAdditivity::Additive { .. }))
    }

    /// All `delta_i`, if every player is additive.
    pub fn deltas(&self) -> Option<Vec<T>> {
        self.per_player
            .iter()
            .map(PlayerAdditivity::delta)
            .collect()
    }

    /// The first counterexample as an error value, or the deltas.
    pub fn into_deltas(self) -> Result<Vec<T>> {
        for (player, verdict) in self.per_player.iter().enumerate() {
            if let PlayerAdditivity::NotAdditive {
                context_a,
                context_b,
                diff_a,
                diff_b,
            } = verdict
            {
                return Err(Error::NotAdditive {
                    player,
                    context_a: context_a.label(),
                    context_b: context_b.label(),
                    diff_a: diff_a.as_f64(),
                    diff_b: diff_b.as_f64(),
                });
            }
        }
        Ok(self.deltas().expect("all players additive"))
    }
}

/// Inserts a zero at bit `player` of `context`, giving a state whose other
/// players' bits spell out `context`.
fn context_state(context: u64, player: usize, n_players: usize) -> ActionState {
    let low = context & ((1u64 << player) - 1);
    let high = (context >> player) << (player + 1);
    ActionState::from_index(high | low, n_players)
}

fn check_player<T: Real>(game: &GameSpec<T>, player: usize, tol: T) -> PlayerAdditivity<T> {
    let n = game.n_players();
    let base = context_state(0, player, n);
    let delta = game.payoff_difference_unchecked(player, base);
    let (mut lo, mut hi) = ((delta, base), (delta, base));
    let mut max_abs = delta.abs();
    for context in 1..1u64 << (n - 1) {
        let a = context_state(context, player, n);
        let d = game.payoff_difference_unchecked(player, a);
        if d < lo.0 {
            lo = (d, a);
        }
        if d > hi.0 {
            hi = (d, a);
        }
        max_abs = max_abs.max(d.abs());
    }
    if hi.0 - lo.0 <= tol * max_abs.max(T::one()) {
        return PlayerAdditivity::Additive { delta };
    }
    let (first, second) = if lo.1 <= hi.1 { (lo, hi) } else { (hi, lo) };
    PlayerAdditivity::NotAdditive {
        context_a: first.1,
        context_b: second.1,
        diff_a: first.0,
        diff_b: second.0,
    }
}

/// Exhaustively checks every player's additivity.
///
/// A player is additive when the spread of its payoff differences over all
/// contexts is at most `tol * max(1, max |diff|)`.
pub fn check_additivity<T: Real>(game: &GameSpec<T>, tol: T) -> Result<AdditivityReport<T>> {
    let n = game.n_players();
    if n > MAX_ADDITIVITY_PLAYERS {
        return Err(Error::TooManyPlayers {
            what: "additivity check",
            n_players: n,
            limit: MAX_ADDITIVITY_PLAYERS,
        });
    }
    let per_player = (0..n)
        .into_par_iter()
        .map(|i| check_player(game, i, tol))
        .collect();
    Ok(AdditivityReport { per_player })
}

/// `alpha * (1 - r / n)`: the constant payoff difference of a defecting
/// public-goods player.
pub fn pgg_delta<T: Real>(alpha: T, multiplier: T, n: usize) -> T {
    alpha * (T::one() - multiplier / T::from_usize_lossy(n))
}
