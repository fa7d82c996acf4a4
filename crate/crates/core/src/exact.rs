//! The full `2^N`-state introspection chain and its stationary distribution.
//!
//! From state `a` the chain moves to `a` with player `i` flipped with
//! probability `(1/N) * [(1 - mu_c - mu_d) * fermi(beta_i, diff_i(a)) + mu_target]`
//! and otherwise stays put. Each row therefore has exactly `N` off-diagonal
//! entries, one per Hamming neighbour.

// The `!(x >= 0)` checks in this module are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;

use rayon::prelude::*;

use crate::model::{state_label, PopulationSpec};
use crate::{Error, Real, Result};

/// Largest chain the matrix builder accepts.
pub const MAX_EXACT_PLAYERS: usize = 24;

/// Largest chain the dense direct solver accepts (a `4096 x 4096` system).
pub const MAX_DENSE_PLAYERS: usize = 12;

/// [`SolveMethod::Auto`] uses the direct solver up to this size.
pub const AUTO_DENSE_PLAYERS: usize = 10;

/// Rows per rayon task; small chains are built on the calling thread.
const PAR_ROWS: usize = 1 << 10;

/// Sparse row-stochastic transition matrix over the `2^N` states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    n_players: usize,
    /// `flips[a * N + i]`: probability of moving from `a` to `a ^ (1 << i)`.
    flips: Vec<T>,
    /// Self-loop probability of each state.
    stay: Vec<T>,
}

impl<T: Real> TransitionMatrix<T> {
    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn n_states(&self) -> usize {
        self.stay.len()
    }

    /// Probability of flipping `player` when in `state`.
    pub fn flip_probability(&self, state: usize, player: usize) -> T {
        self.flips[state * self.n_players + player]
    }

    pub fn stay_probability(&self, state: usize) -> T {
        self.stay[state]
    }

    /// Off-diagonal entries of row `state` as `(target, probability)`.
    pub fn row(&self, state: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let n = self.n_players;
        self.flips[state * n..(state + 1) * n]
            .iter()
            .enumerate()
            .map(move |(i, &p)| (state ^ (1 << i), p))
    }

    /// Entry `T[from][to]`; zero off the Hamming-1 neighbourhood.
    pub fn entry(&self, from: usize, to: usize) -> T {
        if from == to {
            return self.stay[from];
        }
        let diff = from ^ to;
        if diff.is_power_of_two() {
            self.flip_probability(from, diff.trailing_zeros() as usize)
        } else {
            T::zero()
        }
    }

    pub fn row_sum(&self, state: usize) -> T {
        self.stay[state] + self.row(state).map(|(_, p)| p).sum::<T>()
    }

    /// Row-major dense copy. Intended for small chains and tests.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n_states();
        let mut dense = vec![T::zero(); n * n];
        for a in 0..n {
            dense[a * n + a] = self.stay[a];
            for (b, p) in self.row(a) {
                dense[a * n + b] = p;
            }
        }
        dense
    }

    /// One step of the chain applied to a row vector: `pi * T`.
    pub fn apply_left(&self, pi: &[T]) -> Vec<T> {
        let n = self.n_players;
        let step = |b: usize| -> T {
            let mut acc = pi[b] * self.stay[b];
            for i in 0..n {
                let a = b ^ (1 << i);
                acc += pi[a] * self.flips[a * n + i];
            }
            acc
        };
        if self.n_states() >= PAR_ROWS {
            (0..self.n_states()).into_par_iter().map(step).collect()
        } else {
            (0..self.n_states()).map(step).collect()
        }
    }
}

/// Builds the transition matrix of the introspection-with-mutation chain.
pub fn build_transition_matrix<T: Real>(pop: &PopulationSpec<T>) -> Result<TransitionMatrix<T>> {
    pop.require_finite_beta("the exact solver")?;
    let n = pop.n_players();
    if n > MAX_EXACT_PLAYERS {
        return Err(Error::TooManyPlayers {
            what: "exact solver",
            n_players: n,
            limit: MAX_EXACT_PLAYERS,
        });
    }
    let n_states = 1usize << n;
    let game = pop.game();
    let players = pop.players();
    let inv_n = T::one() / T::from_usize_lossy(n);

    let mut flips = vec![T::zero(); n_states * n];
    let mut stay = vec![T::zero(); n_states];
    let fill = |(a, (row, stay)): (usize, (&mut [T], &mut T))| {
        let state = crate::model::ActionState::from_index(a as u64, n);
        game.payoff_differences_into(state, row);
        let mut off = T::zero();
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = inv_n * players[i].switch_probability(*slot, state.cooperates(i));
            off += *slot;
        }
        *stay = T::one() - off;
    };
    if n_states >= PAR_ROWS {
        flips
            .par_chunks_mut(n)
            .zip(stay.par_iter_mut())
            .enumerate()
            .for_each(fill);
    } else {
        flips
            .chunks_mut(n)
            .zip(stay.iter_mut())
            .enumerate()
            .for_each(fill);
    }
    Ok(TransitionMatrix {
        n_players: n,
        flips,
        stay,
    })
}

/// Probability vector over the `2^N` states, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution<T> {
    n_players: usize,
    probs: Vec<T>,
}

impl<T: Real> StationaryDistribution<T> {
    /// Validates non-negativity, length `2^N`, and unit mass (to `1e-12`,
    /// or `64 * epsilon` for `f32`).
    pub fn new(n_players: usize, probs: Vec<T>) -> Result<Self> {
        if n_players == 0 || n_players > MAX_EXACT_PLAYERS {
            return Err(Error::TooManyPlayers {
                what: "stationary distribution",
                n_players,
                limit: MAX_EXACT_PLAYERS,
            });
        }
        if probs.len() != 1 << n_players {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for {n_players} players",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= T::zero())) {
            return Err(Error::InvalidDistribution(format!(
                "negative or NaN entry {p}"
            )));
        }
        let total: T = probs.iter().copied().sum();
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        if (total - T::one()).abs() > tol {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self { n_players, probs })
    }

    /// Clamps rounding-level negatives to zero and rescales to unit mass.
    fn from_solution(n_players: usize, mut probs: Vec<T>) -> Result<Self> {
        for p in probs.iter_mut() {
            if *p < T::zero() {
                *p = T::zero();
            }
        }
        let total: T = probs.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!("solution mass {total}")));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(n_players, probs)
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> T {
        self.probs[state]
    }

    /// Long-run probability that `player` cooperates.
    pub fn marginal(&self, player: usize) -> Result<T> {
        if player >= self.n_players {
            return Err(Error::PlayerIndex {
                index: player,
                n_players: self.n_players,
            });
        }
        Ok(self
            .probs
            .iter()
            .enumerate()
            .filter(|(a, _)| (a >> player) & 1 == 1)
            .map(|(_, p)| *p)
            .sum())
    }

    pub fn marginals(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.n_players];
        for (a, &p) in self.probs.iter().enumerate() {
            for (i, mi) in m.iter_mut().enumerate() {
                if (a >> i) & 1 == 1 {
                    *mi += p;
                }
            }
        }
        m
    }

    /// Expected fraction of cooperators, `sum_a pi_a * popcount(a) / N`.
    pub fn cooperation_probability(&self) -> T {
        let n = T::from_usize_lossy(self.n_players);
        self.probs
            .iter()
            .enumerate()
            .map(|(a, &p)| p * T::from_u32(a.count_ones()).expect("u32 representable"))
            .sum::<T>()
            / n
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    /// Writes `state_label,state_index,probability` rows in bitmask order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["state_label", "state_index", "probability"])?;
        for (a, p) in self.probs.iter().enumerate() {
            w.write_record([state_label(a, self.n_players), a.to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Point mass on one state.
pub fn point_mass<T: Real>(n_players: usize, state: usize) -> Result<StationaryDistribution<T>> {
    let mut probs = vec![T::zero(); 1 << n_players.min(MAX_EXACT_PLAYERS)];
    if state >= probs.len() {
        return Err(Error::StateBits {
            bits: state as u64,
            n_players,
        });
    }
    probs[state] = T::one();
    StationaryDistribution::new(n_players, probs)
}

/// Cooperation probability `p_C = pi . s` of a distribution.
pub fn cooperation_probability<T: Real>(pi: &StationaryDistribution<T>) -> T {
    pi.cooperation_probability()
}

/// Long-run cooperation probability of one player under `pi`.
pub fn marginal<T: Real>(pi: &StationaryDistribution<T>, player: usize) -> Result<T> {
    pi.marginal(player)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Dense Gaussian elimination on `(T^T - I)` with the last equation
    /// replaced by the normalisation constraint.
    Direct,
    /// Repeated `pi <- pi * T` from the uniform distribution.
    Power,
    /// Direct up to [`AUTO_DENSE_PLAYERS`] players, power iteration beyond.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Stop once successive iterates are closer than this in L1.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_iterations: 1_000_000,
        }
    }
}

/// Solves `pi * T = pi` with `sum(pi) = 1`.
pub fn stationary_distribution<T: Real>(
    t: &TransitionMatrix<T>,
    method: SolveMethod,
) -> Result<StationaryDistribution<T>> {
    match method {
        SolveMethod::Direct => solve_direct(t),
        SolveMethod::Power => solve_power(t, PowerOptions::default()),
        SolveMethod::Auto if t.n_players() <= AUTO_DENSE_PLAYERS => solve_direct(t),
        SolveMethod::Auto => solve_power(t, PowerOptions::default()),
    }
}

/// Convenience: build the chain for `pop` and solve it.
pub fn solve<T: Real>(
    pop: &PopulationSpec<T>,
    method: SolveMethod,
) -> Result<StationaryDistribution<T>> {
    stationary_distribution(&build_transition_matrix(pop)?, method)
}

fn solve_direct<T: Real>(t: &TransitionMatrix<T>) -> Result<StationaryDistribution<T>> {
    let n_players = t.n_players();
    if n_players > MAX_DENSE_PLAYERS {
        return Err(Error::TooManyPlayers {
            what: "dense direct solver",
            n_players,
            limit: MAX_DENSE_PLAYERS,
        });
    }
    let m = t.n_states();
    // a[b][a] = T[a][b] - [a == b]
    let mut a = vec![T::zero(); m * m];
    for s in 0..m {
        a[s * m + s] = t.stay_probability(s) - T::one();
        for (target, p) in t.row(s) {
            a[target * m + s] += p;
        }
    }
    let last = m - 1;
    a[last * m..].iter_mut().for_each(|x| *x = T::one());
    let mut rhs = vec![T::zero(); m];
    rhs[last] = T::one();
    gaussian_solve(&mut a, &mut rhs, m)?;
    StationaryDistribution::from_solution(n_players, rhs)
}

/// In-place Gaussian elimination with partial pivoting on a row-major
/// `m x m` system; the solution is left in `rhs`.
fn gaussian_solve<T: Real>(a: &mut [T], rhs: &mut [T], m: usize) -> Result<()> {
    for k in 0..m {
        let (pivot_row, pivot) =
            (k..m)
                .map(|r| (r, a[r * m + k].abs()))
                .fold(
                    (k, T::zero()),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if !(pivot >= T::min_positive_value()) {
            return Err(Error::Singular {
                column: k,
                pivot: pivot.as_f64(),
            });
        }
        if pivot_row != k {
            for c in 0..m {
                a.swap(k * m + c, pivot_row * m + c);
            }
            rhs.swap(k, pivot_row);
        }
        let (head, tail) = a.split_at_mut((k + 1) * m);
        let pivot_slice = &head[k * m + k..k * m + m];
        let inv = T::one() / pivot_slice[0];
        let rhs_k = rhs[k];
        for (r, row) in tail.chunks_exact_mut(m).enumerate() {
            let factor = row[k] * inv;
            if factor == T::zero() {
                continue;
            }
            for (x, &p) in row[k..].iter_mut().zip(pivot_slice) {
                *x -= factor * p;
            }
            rhs[k + 1 + r] -= factor * rhs_k;
        }
    }
    for k in (0..m).rev() {
        let row = &a[k * m..(k + 1) * m];
        let mut acc = rhs[k];
        for c in k + 1..m {
            acc -= row[c] * rhs[c];
        }
        rhs[k] = acc / row[k];
    }
    Ok(())
}

/// Power iteration with explicit options.
pub fn solve_power<T: Real>(
    t: &TransitionMatrix<T>,
    options: PowerOptions,
) -> Result<StationaryDistribution<T>> {
    let m = t.n_states();
    let tol = T::lit(options.tolerance);
    let mut pi = vec![T::one() / T::from_usize_lossy(m); m];
    let mut last_step = T::infinity();
    for _ in 0..options.max_iterations {
        let mut next = t.apply_left(&pi);
        let total: T = next.iter().copied().sum();
        next.iter_mut().for_each(|p| *p /= total);
        last_step = next
            .iter()
            .zip(&pi)
            .map(|(x, y)| (*x - *y).abs())
            .sum::<T>();
        pi = next;
        if last_step < tol {
            return StationaryDistribution::from_solution(t.n_players(), pi);
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        last_step: last_step.as_f64(),
    })
}

/// `|| pi * T - pi ||_1`.
pub fn stationarity_residual<T: Real>(
    t: &TransitionMatrix<T>,
    pi: &StationaryDistribution<T>,
) -> T {
    t.apply_left(pi.probs())
        .iter()
        .zip(pi.probs())
        .map(|(x, y)| (*x - *y).abs())
        .sum()
}
