//! Closed-form stationary behaviour of additive games.
//!
//! In an additive game each selection of player `i` leaves them cooperating
//! with a fixed probability
//!
//! ```text
//! p_i = fermi(beta_i, delta_i) * (1 - mu_c - mu_d) + mu_c
//! ```
//!
//! whatever the current state, so the stationary distribution is the product
//! of independent Bernoulli(`p_i`) marginals and `p_C` is the mean of the `p_i`.
//! Everything else here (neutral drift, strong-selection limits, the
//! cooperation threshold, the mutation-selection balance line) follows from
//! that formula.

use crate::additivity::{check_additivity, pgg_delta};
use crate::exact::{StationaryDistribution, MAX_EXACT_PLAYERS};
use crate::model::{fermi, GameSpec, GameVariant, PlayerParams, PopulationSpec};
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerClosedForm<T> {
    /// Long-run cooperation probability.
    pub p: T,
    pub delta: T,
    /// `fermi(beta, delta)`: the mutation-free cooperation probability.
    pub phi: T,
}

/// Long-run cooperation probability of a player with constant payoff
/// difference `delta`.
///
/// An infinite `beta` evaluates the strong-selection limit, which is only
/// defined for `delta != 0`.
pub fn player_cooperation_probability<T: Real>(
    delta: T,
    params: &PlayerParams<T>,
) -> Result<PlayerClosedForm<T>> {
    if !delta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "delta must be finite, got {delta}"
        )));
    }
    let phi = if params.has_finite_beta() {
        fermi(params.beta(), delta)
    } else if delta > T::zero() {
        T::zero()
    } else if delta < T::zero() {
        T::one()
    } else {
        return Err(Error::ZeroDelta);
    };
    Ok(PlayerClosedForm {
        p: phi * params.selection_weight() + params.mu_c(),
        delta,
        phi,
    })
}

/// Product measure `pi_a = prod_i p_i^{a_i} (1 - p_i)^{1 - a_i}`.
pub fn product_measure<T: Real>(ps: &[T]) -> Result<StationaryDistribution<T>> {
    if ps.is_empty() {
        return Err(Error::Empty("cooperation probabilities"));
    }
    if ps.len() > MAX_EXACT_PLAYERS {
        return Err(Error::TooManyPlayers {
            what: "product measure",
            n_players: ps.len(),
            limit: MAX_EXACT_PLAYERS,
        });
    }
    if let Some(p) = ps.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
        return Err(Error::Probability(p.as_f64()));
    }
    // player i owns bit i: each pass doubles the table, upper half cooperating
    let mut probs = Vec::with_capacity(1 << ps.len());
    probs.push(T::one());
    for &p in ps {
        let lower = probs.len();
        probs.extend_from_within(..);
        for (k, x) in probs.iter_mut().enumerate() {
            *x *= if k < lower { T::one() - p } else { p };
        }
    }
    StationaryDistribution::new(ps.len(), probs)
}

/// Mean of the individual cooperation probabilities.
pub fn group_cooperation<T: Real>(ps: &[T]) -> Result<T> {
    if ps.is_empty() {
        return Err(Error::Empty("cooperation probabilities"));
    }
    Ok(ps.iter().copied().sum::<T>() / T::from_usize_lossy(ps.len()))
}

/// Closed form for one public-goods player with contribution `alpha` and
/// multiplier `multiplier` in a group of `n`.
pub fn pgg_player<T: Real>(
    alpha: T,
    multiplier: T,
    n: usize,
    params: &PlayerParams<T>,
) -> Result<PlayerClosedForm<T>> {
    player_cooperation_probability(pgg_delta(alpha, multiplier, n), params)
}

/// Per-player closed forms for a public goods game.
pub fn pgg_players<T: Real>(
    game: &GameSpec<T>,
    players: &[PlayerParams<T>],
) -> Result<Vec<PlayerClosedForm<T>>> {
    let GameVariant::Pgg {
        alphas,
        multipliers,
    } = game.variant()
    else {
        return Err(Error::NotPgg("closed-form public goods cooperation"));
    };
    let n = alphas.len();
    if players.len() != n {
        return Err(Error::InvalidParams(format!(
            "{} player parameter sets for a {n}-player game",
            players.len()
        )));
    }
    alphas
        .iter()
        .zip(multipliers)
        .zip(players)
        .map(|((&a, &r), params)| pgg_player(a, r, n, params))
        .collect()
}

/// Long-run cooperation probability `p_C` of a public goods game.
pub fn pgg_cooperation_probability<T: Real>(
    game: &GameSpec<T>,
    players: &[PlayerParams<T>],
) -> Result<T> {
    let ps: Vec<T> = pgg_players(game, players)?.iter().map(|c| c.p).collect();
    group_cooperation(&ps)
}

/// Closed forms for any additive population, with the deltas read off the
/// game by exhaustive scan. Fails with [`Error::NotAdditive`] otherwise.
pub fn additive_players<T: Real>(
    pop: &PopulationSpec<T>,
    tol: T,
) -> Result<Vec<PlayerClosedForm<T>>> {
    let deltas = check_additivity(pop.game(), tol)?.into_deltas()?;
    deltas
        .into_iter()
        .zip(pop.players())
        .map(|(d, params)| player_cooperation_probability(d, params))
        .collect()
}

/// Neutral-drift cooperation probability `(1 + mu_c - mu_d) / 2` (`beta = 0`).
pub fn neutral_drift<T: Real>(params: &PlayerParams<T>) -> T {
    (T::one() + params.mu_c() - params.mu_d()) / T::lit(2.0)
}

/// `mu_c` for `delta > 0`, `1 - mu_d` for `delta < 0`.
pub fn strong_selection_limit<T: Real>(delta: T, params: &PlayerParams<T>) -> Result<T> {
    if delta > T::zero() {
        Ok(params.mu_c())
    } else if delta < T::zero() {
        Ok(T::one() - params.mu_d())
    } else {
        Err(Error::ZeroDelta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdVerdict<T> {
    /// Whether the player cooperates with probability strictly above 1/2.
    pub exceeds_half: bool,
    /// `ln((1/2 - mu_d) / (1/2 - mu_c))`; `+inf` when `mu_c >= 1/2`, `-inf`
    /// when `mu_d >= 1/2`.
    pub log_odds_bound: T,
}

/// Decides `p > 1/2` through `beta * delta < ln((1/2 - mu_d) / (1/2 - mu_c))`.
pub fn threshold_check<T: Real>(delta: T, params: &PlayerParams<T>) -> ThresholdVerdict<T> {
    let half = T::lit(0.5);
    let (up, down) = (half - params.mu_d(), half - params.mu_c());
    let log_odds_bound = if up <= T::zero() {
        T::neg_infinity()
    } else if down <= T::zero() {
        T::infinity()
    } else {
        (up / down).ln()
    };
    let exceeds_half = if params.has_finite_beta() || delta == T::zero() {
        let scaled = if delta == T::zero() {
            T::zero()
        } else {
            params.beta() * delta
        };
        scaled < log_odds_bound
    } else {
        // limit value is mu_c or 1 - mu_d
        strong_selection_limit(delta, params).is_ok_and(|p| p > half)
    };
    ThresholdVerdict {
        exceeds_half,
        log_odds_bound,
    }
}

/// Aggregate cooperation under common symmetric mutation as a function of the rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceLine<T> {
    /// Mean mutation-free cooperation probability.
    pub phi_bar: T,
    /// `d p_C / d mu = 1 - 2 * phi_bar`.
    pub slope: T,
}

impl<T: Real> BalanceLine<T> {
    pub fn at(&self, mu: T) -> T {
        self.phi_bar + mu * self.slope
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance<T> {
    pub p_c: T,
    pub line: BalanceLine<T>,
}

/// `p_C = (1 - 2 mu) * mean_i fermi(beta_i, delta_i) + mu`.
pub fn mutation_selection_balance<T: Real>(deltas: &[T], betas: &[T], mu: T) -> Result<Balance<T>> {
    if deltas.len() != betas.len() {
        return Err(Error::InvalidParams(format!(
            "{} deltas but {} selection intensities",
            deltas.len(),
            betas.len()
        )));
    }
    if deltas.is_empty() {
        return Err(Error::Empty("players"));
    }
    if !(mu >= T::zero() && mu <= T::lit(0.5)) {
        return Err(Error::MutationOutOfRange(mu.as_f64()));
    }
    let phis: Vec<T> = deltas
        .iter()
        .zip(betas)
        .map(|(&d, &b)| {
            let params = PlayerParams::new(b, T::zero(), T::zero())?;
            Ok(player_cooperation_probability(d, &params)?.phi)
        })
        .collect::<Result<_>>()?;
    let phi_bar = group_cooperation(&phis)?;
    let line = BalanceLine {
        phi_bar,
        slope: T::one() - T::lit(2.0) * phi_bar,
    };
    Ok(Balance {
        p_c: (T::one() - T::lit(2.0) * mu) * phi_bar + mu,
        line,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, mu_c: f64, mu_d: f64) -> PlayerParams<f64> {
        PlayerParams::new(beta, mu_c, mu_d).unwrap()
    }

    #[test]
    fn donation_game_players() {
        let p = params(5.0, 0.05, 0.15);
        let p1 = player_cooperation_probability(0.6, &p).unwrap();
        let p2 = player_cooperation_probability(0.1, &p).unwrap();
        assert!((p1.p - 0.088).abs() < 5e-4);
        assert!((p2.p - 0.352).abs() < 5e-4);
        assert!((p1.p - (p1.phi * 0.8 + 0.05)).abs() < 1e-15);
    }

    #[test]
    fn neutral_players() {
        for delta in [-3.0, 0.0, 2.5] {
            let c = player_cooperation_probability(delta, &params(0.0, 0.2, 0.2)).unwrap();
            assert!((c.p - 0.5).abs() < 1e-15);
        }
        assert_eq!(neutral_drift(&params(0.0, 0.1, 0.1)), 0.5);
        assert!((neutral_drift(&params(0.0, 0.05, 0.15)) - 0.45).abs() < 1e-15);
        assert_eq!(neutral_drift(&params(0.0, 0.0, 0.0)), 0.5);
    }

    #[test]
    fn infinite_beta() {
        let p = params(f64::INFINITY, 0.1, 0.2);
        assert_eq!(player_cooperation_probability(1.0, &p).unwrap().p, 0.1);
        assert!((player_cooperation_probability(-1.0, &p).unwrap().p - 0.8).abs() < 1e-15);
        assert_eq!(
            player_cooperation_probability(0.0, &p),
            Err(Error::ZeroDelta)
        );
    }

    #[test]
    fn strong_selection_endpoints() {
        assert_eq!(
            strong_selection_limit(0.3, &params(1.0, 0.1, 0.2)).unwrap(),
            0.1
        );
        assert_eq!(
            strong_selection_limit(-0.3, &params(1.0, 0.2, 0.1)).unwrap(),
            0.9
        );
        assert_eq!(
            strong_selection_limit(0.3, &params(1.0, 0.0, 0.0)).unwrap(),
            0.0
        );
        assert_eq!(
            strong_selection_limit(0.0, &params(1.0, 0.0, 0.0)),
            Err(Error::ZeroDelta)
        );
    }

    #[test]
    fn product_measure_table1() {
        let pi = product_measure(&[0.2669f64, 0.5, 0.8999]).unwrap();
        // DDC is bitmask 0b100, CDD is 0b001
        assert!((pi.prob(0b100) - 0.3299).abs() < 1e-4);
        assert!((pi.prob(0b001) - 0.0133).abs() < 1e-4);
    }

    #[test]
    fn product_measure_trivial() {
        let pi = product_measure(&[1.0; 5]).unwrap();
        assert_eq!(pi.prob(31), 1.0);
        assert_eq!(pi.probs().iter().sum::<f64>(), 1.0);
        let pi = product_measure(&[0.5; 4]).unwrap();
        assert!(pi.probs().iter().all(|&p| p == 1.0 / 16.0));
        assert!(product_measure::<f64>(&[]).is_err());
        assert!(matches!(
            product_measure(&[1.2]),
            Err(Error::Probability(_))
        ));
    }

    #[test]
    fn group_means() {
        assert!((group_cooperation(&[0.2669f64, 0.5, 0.8999]).unwrap() - 0.555_6).abs() < 1e-4);
        assert!((group_cooperation(&[0.3f64; 7]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(group_cooperation(&[0.0, 1.0]).unwrap(), 0.5);
        assert!(group_cooperation::<f64>(&[]).is_err());
    }

    #[test]
    fn pgg_table1() {
        let game = GameSpec::pgg(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 9.0]).unwrap();
        let players = vec![params(2.0, 0.1, 0.1); 3];
        let pc = pgg_cooperation_probability(&game, &players).unwrap();
        assert!((pc - 0.555_627_302_174).abs() < 1e-11);
        let bimatrix = GameSpec::stag_hunt(1.0, 0.6, 0.1).unwrap();
        assert!(matches!(
            pgg_cooperation_probability(&bimatrix, &players[..2]),
            Err(Error::NotPgg(_))
        ));
    }

    #[test]
    fn pgg_at_threshold_multiplier() {
        let game = GameSpec::uniform_pgg(4, 1.5, 4.0).unwrap();
        let players: Vec<_> = [(0.1, 0.2), (0.0, 0.3), (0.25, 0.05), (0.1, 0.1)]
            .iter()
            .map(|&(c, d)| params(3.0, c, d))
            .collect();
        let expected = players
            .iter()
            .map(|p| (1.0 - p.mu_c() - p.mu_d()) / 2.0 + p.mu_c())
            .sum::<f64>()
            / 4.0;
        let pc = pgg_cooperation_probability(&game, &players).unwrap();
        assert!((pc - expected).abs() < 1e-15);
    }

    #[test]
    fn additive_players_rejects_stag_hunt() {
        let pop = PopulationSpec::uniform(
            GameSpec::stag_hunt(1.0, 0.6, 0.1).unwrap(),
            params(5.0, 0.05, 0.15),
        );
        assert!(matches!(
            additive_players(&pop, 1e-9),
            Err(Error::NotAdditive { .. })
        ));
    }

    #[test]
    fn threshold_examples() {
        let sym = params(2.0, 0.1, 0.1);
        assert!(threshold_check(-0.5, &sym).exceeds_half);
        assert!(!threshold_check(0.5, &sym).exceeds_half);
        assert!(!threshold_check(0.0, &sym).exceeds_half);

        let v = threshold_check(0.1, &params(2.0, 0.3, 0.1));
        assert!((v.log_odds_bound - 2f64.ln()).abs() < 1e-15);
        assert!(v.exceeds_half);
        assert!(
            player_cooperation_probability(0.1, &params(2.0, 0.3, 0.1))
                .unwrap()
                .p
                > 0.5
        );
    }

    #[test]
    fn threshold_degenerate_mutation() {
        let v = threshold_check(10.0, &params(3.0, 0.6, 0.1));
        assert_eq!(v.log_odds_bound, f64::INFINITY);
        assert!(v.exceeds_half);
        let v = threshold_check(-10.0, &params(3.0, 0.1, 0.5));
        assert_eq!(v.log_odds_bound, f64::NEG_INFINITY);
        assert!(!v.exceeds_half);
        assert!(threshold_check(-1.0, &params(f64::INFINITY, 0.1, 0.1)).exceeds_half);
        assert!(!threshold_check(1.0, &params(f64::INFINITY, 0.1, 0.1)).exceeds_half);
    }

    #[test]
    fn balance_examples() {
        let deltas = [0.4f64, -1.0, 2.0];
        let betas = [1.0, 0.5, 3.0];
        let half = mutation_selection_balance(&deltas, &betas, 0.5).unwrap();
        assert!((half.p_c - 0.5).abs() < 1e-15);
        let zero = mutation_selection_balance(&deltas, &betas, 0.0).unwrap();
        assert_eq!(zero.p_c, zero.line.phi_bar);
        assert!(mutation_selection_balance(&deltas, &betas, 0.6).is_err());
        assert!(mutation_selection_balance(&deltas, &betas[..2], 0.1).is_err());
    }

    #[test]
    fn balance_known_phi() {
        // a single player with phi = 0.3 exactly: beta * delta = ln(7/3)
        let delta = (7.0f64 / 3.0).ln();
        let b = mutation_selection_balance(&[delta], &[1.0], 0.1).unwrap();
        assert!((b.line.phi_bar - 0.3).abs() < 1e-15);
        assert!((b.p_c - 0.34).abs() < 1e-15);
        assert!((b.line.at(0.1) - 0.34).abs() < 1e-15);
    }
}
