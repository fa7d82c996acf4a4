//! States, games, player parameters and payoff evaluation.
//!
//! Players are indexed from zero in this API. Player `i` owns bit `i` of an
//! [`ActionState`], so state index 0 is all-defect. Labels print player 0
//! leftmost: `"DDC"` is the state where only the third player cooperates,
//! i.e. bitmask `0b100`.

use std::fmt;

use crate::{Error, Real, Result};

/// Widest state representable in an [`ActionState`].
pub const MAX_PLAYERS: usize = 64;

/// Largest player count accepted by [`GameSpec::table`] (`2^N` payoff rows).
pub const MAX_TABLE_PLAYERS: usize = 20;

/// A profile of `N` binary actions packed into a bitmask (C = 1, D = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionState {
    bits: u64,
    n_players: usize,
}

fn width_mask(n_players: usize) -> u64 {
    if n_players >= 64 {
        u64::MAX
    } else {
        (1u64 << n_players) - 1
    }
}

impl ActionState {
    pub fn new(bits: u64, n_players: usize) -> Result<Self> {
        if n_players == 0 || n_players > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "action state",
                n_players,
                limit: MAX_PLAYERS,
            });
        }
        if bits & !width_mask(n_players) != 0 {
            return Err(Error::StateBits { bits, n_players });
        }
        Ok(Self { bits, n_players })
    }

    /// Constructs a state without range checks. `bits` must fit in `n_players`.
    pub(crate) fn from_index(bits: u64, n_players: usize) -> Self {
        debug_assert!(bits & !width_mask(n_players) == 0);
        Self { bits, n_players }
    }

    pub fn all_defect(n_players: usize) -> Result<Self> {
        Self::new(0, n_players)
    }

    pub fn all_cooperate(n_players: usize) -> Result<Self> {
        Self::new(width_mask(n_players.min(MAX_PLAYERS)), n_players)
    }

    /// Parses a label such as `"CDC"`, player 0 first.
    pub fn from_label(label: &str) -> Result<Self> {
        let mut bits = 0u64;
        let mut n = 0;
        for (i, ch) in label.chars().enumerate() {
            match ch {
                'C' | 'c' if i < MAX_PLAYERS => bits |= 1 << i,
                'D' | 'd' if i < MAX_PLAYERS => {}
                _ => return Err(Error::StateLabel(label.to_string())),
            }
            n = i + 1;
        }
        if n == 0 {
            return Err(Error::StateLabel(label.to_string()));
        }
        Self::new(bits, n)
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn n_players(self) -> usize {
        self.n_players
    }

    pub fn cooperates(self, player: usize) -> bool {
        (self.bits >> player) & 1 == 1
    }

    /// The state with `player`'s action switched.
    pub fn flip(self, player: usize) -> Self {
        debug_assert!(player < self.n_players);
        Self {
            bits: self.bits ^ (1 << player),
            n_players: self.n_players,
        }
    }

    pub fn cooperators(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn label(self) -> String {
        (0..self.n_players)
            .map(|i| if self.cooperates(i) { 'C' } else { 'D' })
            .collect()
    }

    fn check_player(self, player: usize) -> Result<()> {
        if player >= self.n_players {
            Err(Error::PlayerIndex {
                index: player,
                n_players: self.n_players,
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for ActionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Label of state `index` in an `n_players` game.
pub fn state_label(index: usize, n_players: usize) -> String {
    ActionState::from_index(index as u64, n_players).label()
}

/// Learning and noise parameters of a single player.
///
/// `beta` may be `+inf` only for the strong-selection limit in
/// [`crate::closed_form`]; every matrix or simulation path rejects it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerParams<T> {
    beta: T,
    mu_c: T,
    mu_d: T,
}

impl<T: Real> PlayerParams<T> {
    pub fn new(beta: T, mu_c: T, mu_d: T) -> Result<Self> {
        if beta.is_nan() || beta < T::zero() {
            return Err(Error::InvalidParams(format!(
                "selection intensity must be >= 0, got {beta}"
            )));
        }
        for (name, mu) in [("mu_c", mu_c), ("mu_d", mu_d)] {
            if !(mu >= T::zero() && mu < T::one()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must lie in [0, 1), got {mu}"
                )));
            }
        }
        if mu_c + mu_d >= T::one() {
            return Err(Error::InvalidParams(format!(
                "mu_c + mu_d must be < 1, got {mu_c} + {mu_d}"
            )));
        }
        Ok(Self { beta, mu_c, mu_d })
    }

    /// Symmetric mutation `mu` in both directions.
    pub fn symmetric(beta: T, mu: T) -> Result<Self> {
        Self::new(beta, mu, mu)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn mu_c(&self) -> T {
        self.mu_c
    }

    pub fn mu_d(&self) -> T {
        self.mu_d
    }

    pub fn has_finite_beta(&self) -> bool {
        self.beta.is_finite()
    }

    /// Probability that a selected player follows the Fermi rule, `1 - mu_c - mu_d`.
    pub fn selection_weight(&self) -> T {
        T::one() - self.mu_c - self.mu_d
    }

    /// Mutation probability towards the given action.
    pub fn mutation_towards(&self, cooperate: bool) -> T {
        if cooperate {
            self.mu_c
        } else {
            self.mu_d
        }
    }

    /// Probability that this player, once selected, switches away from its
    /// current action given the payoff difference `delta_f` of keeping it.
    pub fn switch_probability(&self, delta_f: T, currently_cooperating: bool) -> T {
        self.selection_weight() * fermi(self.beta, delta_f)
            + self.mutation_towards(!currently_cooperating)
    }

    pub fn with_beta(self, beta: T) -> Result<Self> {
        Self::new(beta, self.mu_c, self.mu_d)
    }
}

/// The payoff structure of a game. Construct through the validating
/// constructors on [`GameSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum GameVariant<T> {
    /// Heterogeneous linear public goods game.
    Pgg { alphas: Vec<T>, multipliers: Vec<T> },
    /// Two-player game. `row[x][y]` is player 0's payoff and `col[x][y]`
    /// player 1's when player 0 plays `x` and player 1 plays `y`, with
    /// index 0 = C and 1 = D (the usual matrix layout).
    Bimatrix { row: [[T; 2]; 2], col: [[T; 2]; 2] },
    /// Donation game: each cooperator `j` pays `c_j` and every other player
    /// receives `b / (N - 1)` from them. For `N = 2` this is the pairwise
    /// donation game `f_i = b * a_other - c_i * a_i`.
    Donation { benefit: T, costs: Vec<T> },
    /// Explicit payoffs, `payoffs[state * N + i]`, states in bitmask order.
    Table { n_players: usize, payoffs: Vec<T> },
}

/// A validated game with `N >= 1` players.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<T> {
    variant: GameVariant<T>,
}

impl<T: Real> GameSpec<T> {
    pub fn pgg(alphas: Vec<T>, multipliers: Vec<T>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidGame(
                "public goods game needs at least one player".into(),
            ));
        }
        if alphas.len() != multipliers.len() {
            return Err(Error::InvalidGame(format!(
                "{} contributions but {} multipliers",
                alphas.len(),
                multipliers.len()
            )));
        }
        if alphas.len() > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "public goods game",
                n_players: alphas.len(),
                limit: MAX_PLAYERS,
            });
        }
        if let Some(a) = alphas.iter().find(|a| !(a.is_finite() && **a > T::zero())) {
            return Err(Error::InvalidGame(format!(
                "contribution must be finite and > 0, got {a}"
            )));
        }
        if let Some(r) = multipliers
            .iter()
            .find(|r| !(r.is_finite() && **r > T::zero()))
        {
            return Err(Error::InvalidGame(format!(
                "multiplier must be finite and > 0, got {r}"
            )));
        }
        Ok(Self {
            variant: GameVariant::Pgg {
                alphas,
                multipliers,
            },
        })
    }

    /// Same contribution and multiplier for all `n` players.
    pub fn uniform_pgg(n: usize, alpha: T, multiplier: T) -> Result<Self> {
        Self::pgg(vec![alpha; n], vec![multiplier; n])
    }

    pub fn bimatrix(row: [[T; 2]; 2], col: [[T; 2]; 2]) -> Result<Self> {
        if row
            .iter()
            .chain(col.iter())
            .flatten()
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidGame("bimatrix payoffs must be finite".into()));
        }
        Ok(Self {
            variant: GameVariant::Bimatrix { row, col },
        })
    }

    pub fn donation(benefit: T, costs: Vec<T>) -> Result<Self> {
        if costs.len() < 2 {
            return Err(Error::InvalidGame(
                "donation game needs at least two players".into(),
            ));
        }
        if costs.len() > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "donation game",
                n_players: costs.len(),
                limit: MAX_PLAYERS,
            });
        }
        if !benefit.is_finite() || costs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGame("donation payoffs must be finite".into()));
        }
        Ok(Self {
            variant: GameVariant::Donation { benefit, costs },
        })
    }

    pub fn table(n_players: usize, payoffs: Vec<T>) -> Result<Self> {
        if n_players == 0 {
            return Err(Error::InvalidGame(
                "table game needs at least one player".into(),
            ));
        }
        if n_players > MAX_TABLE_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "table game",
                n_players,
                limit: MAX_TABLE_PLAYERS,
            });
        }
        let expected = (1usize << n_players) * n_players;
        if payoffs.len() != expected {
            return Err(Error::InvalidGame(format!(
                "table for {n_players} players needs {expected} payoffs, got {}",
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGame("table payoffs must be finite".into()));
        }
        Ok(Self {
            variant: GameVariant::Table { n_players, payoffs },
        })
    }

    /// Tabulates `f(player, state)` over every state.
    pub fn table_from_fn(n_players: usize, f: impl Fn(usize, ActionState) -> T) -> Result<Self> {
        if n_players == 0 || n_players > MAX_TABLE_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "table game",
                n_players,
                limit: MAX_TABLE_PLAYERS,
            });
        }
        let payoffs = (0..1u64 << n_players)
            .flat_map(|bits| {
                let a = ActionState::from_index(bits, n_players);
                (0..n_players).map(move |i| (i, a))
            })
            .map(|(i, a)| f(i, a))
            .collect();
        Self::table(n_players, payoffs)
    }

    /// Donation-form Prisoner's Dilemma as a bimatrix:
    /// `[[b-c1, b-c2], [-c1, b]; [b, -c2], [0, 0]]`.
    pub fn donation_prisoners_dilemma(benefit: T, c1: T, c2: T) -> Result<Self> {
        let z = T::zero();
        Self::bimatrix(
            [[benefit - c1, -c1], [benefit, z]],
            [[benefit - c2, benefit], [-c2, z]],
        )
    }

    /// Stag Hunt: `[[b-c1, b-c2], [-c1, 0]; [0, -c2], [0, 0]]`.
    pub fn stag_hunt(benefit: T, c1: T, c2: T) -> Result<Self> {
        let z = T::zero();
        Self::bimatrix([[benefit - c1, -c1], [z, z]], [[benefit - c2, z], [-c2, z]])
    }

    /// Symmetric two-player game with reward, sucker, temptation and punishment payoffs.
    pub fn rpst(reward: T, sucker: T, temptation: T, punishment: T) -> Result<Self> {
        Self::bimatrix(
            [[reward, sucker], [temptation, punishment]],
            [[reward, temptation], [sucker, punishment]],
        )
    }

    /// Volunteer's dilemma: everyone gets `benefit` if at least one player
    /// cooperates; cooperators pay `cost`.
    pub fn volunteers_dilemma(n_players: usize, benefit: T, cost: T) -> Result<Self> {
        Self::table_from_fn(n_players, |i, a| {
            let b = if a.cooperators() > 0 {
                benefit
            } else {
                T::zero()
            };
            if a.cooperates(i) {
                b - cost
            } else {
                b
            }
        })
    }

    pub fn variant(&self) -> &GameVariant<T> {
        &self.variant
    }

    pub fn n_players(&self) -> usize {
        match &self.variant {
            GameVariant::Pgg { alphas, .. } => alphas.len(),
            GameVariant::Bimatrix { .. } => 2,
            GameVariant::Donation { costs, .. } => costs.len(),
            GameVariant::Table { n_players, .. } => *n_players,
        }
    }

    /// The shared pool `(1/N) * sum_j r_j alpha_j a_j` of a public goods game.
    fn pgg_pool(alphas: &[T], multipliers: &[T], a: ActionState) -> T {
        let n = T::from_usize_lossy(alphas.len());
        let total: T = (0..alphas.len())
            .filter(|&j| a.cooperates(j))
            .map(|j| multipliers[j] * alphas[j])
            .sum();
        total / n
    }

    fn check(&self, player: usize, a: ActionState) -> Result<()> {
        let n = self.n_players();
        if a.n_players() != n {
            return Err(Error::StateWidth {
                got: a.n_players(),
                expected: n,
            });
        }
        a.check_player(player)
    }

    /// Payoff `f_i(a)` of `player` in state `a`.
    pub fn payoff(&self, player: usize, a: ActionState) -> Result<T> {
        self.check(player, a)?;
        Ok(self.payoff_unchecked(player, a))
    }

    pub(crate) fn payoff_unchecked(&self, i: usize, a: ActionState) -> T {
        match &self.variant {
            GameVariant::Pgg {
                alphas,
                multipliers,
            } => {
                let own = if a.cooperates(i) {
                    alphas[i]
                } else {
                    T::zero()
                };
                Self::pgg_pool(alphas, multipliers, a) - own
            }
            GameVariant::Bimatrix { row, col } => {
                let x = usize::from(!a.cooperates(0));
                let y = usize::from(!a.cooperates(1));
                if i == 0 {
                    row[x][y]
                } else {
                    col[x][y]
                }
            }
            GameVariant::Donation { benefit, costs } => {
                let n = costs.len();
                let others = a.cooperators() - u32::from(a.cooperates(i));
                let share = *benefit / T::from_usize_lossy(n - 1);
                let received = share * T::from_u32(others).expect("u32 representable");
                if a.cooperates(i) {
                    received - costs[i]
                } else {
                    received
                }
            }
            GameVariant::Table { n_players, payoffs } => payoffs[a.index() * n_players + i],
        }
    }

    /// Payoff difference `f_i(a) - f_i(a with player i flipped)`.
    pub fn payoff_difference(&self, player: usize, a: ActionState) -> Result<T> {
        self.check(player, a)?;
        Ok(self.payoff_difference_unchecked(player, a))
    }

    pub(crate) fn payoff_difference_unchecked(&self, i: usize, a: ActionState) -> T {
        self.payoff_unchecked(i, a) - self.payoff_unchecked(i, a.flip(i))
    }

    /// Writes `payoff_difference(i, a)` for every player into `out`.
    ///
    /// For the public goods game the pool is evaluated once per state, so a
    /// whole row costs `O(N)` instead of `O(N^2)`.
    pub(crate) fn payoff_differences_into(&self, a: ActionState, out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n_players());
        match &self.variant {
            GameVariant::Pgg {
                alphas,
                multipliers,
            } => {
                let n = T::from_usize_lossy(alphas.len());
                let pool = Self::pgg_pool(alphas, multipliers, a);
                for (i, slot) in out.iter_mut().enumerate() {
                    let share = multipliers[i] * alphas[i] / n;
                    let (here, there) = if a.cooperates(i) {
                        (pool - alphas[i], pool - share)
                    } else {
                        (pool, pool + share - alphas[i])
                    };
                    *slot = here - there;
                }
            }
            _ => {
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = self.payoff_difference_unchecked(i, a);
                }
            }
        }
    }
}

/// Personal Fermi function `1 / (1 + exp(beta * x))`.
///
/// Evaluated in the branch form that never exponentiates a positive
/// argument, so it saturates cleanly at 0 and 1 instead of overflowing.
pub fn fermi<T: Real>(beta: T, x: T) -> T {
    let z = beta * x;
    if z.is_nan() {
        // beta = 0 with infinite x, or beta = inf with x = 0
        return T::lit(0.5);
    }
    if z >= T::zero() {
        let e = (-z).exp();
        e / (T::one() + e)
    } else {
        T::one() / (T::one() + z.exp())
    }
}

/// A game together with the parameters of each of its players.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec<T> {
    game: GameSpec<T>,
    players: Vec<PlayerParams<T>>,
}

impl<T: Real> PopulationSpec<T> {
    pub fn new(game: GameSpec<T>, players: Vec<PlayerParams<T>>) -> Result<Self> {
        if players.len() != game.n_players() {
            return Err(Error::InvalidParams(format!(
                "{} player parameter sets for a {}-player game",
                players.len(),
                game.n_players()
            )));
        }
        Ok(Self { game, players })
    }

    /// Every player gets the same parameters.
    pub fn uniform(game: GameSpec<T>, params: PlayerParams<T>) -> Self {
        let players = vec![params; game.n_players()];
        Self { game, players }
    }

    pub fn game(&self) -> &GameSpec<T> {
        &self.game
    }

    pub fn players(&self) -> &[PlayerParams<T>] {
        &self.players
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub(crate) fn require_finite_beta(&self, what: &'static str) -> Result<()> {
        if self.players.iter().all(PlayerParams::has_finite_beta) {
            Ok(())
        } else {
            Err(Error::InfiniteBeta(what))
        }
    }
}
