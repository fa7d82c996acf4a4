//! Monte Carlo realisation of the introspection chain.
//!
//! One step selects one player uniformly at random, so `N` steps select each
//! player once on average. Each replicate reports the time average of the
//! cooperator fraction over the post-warm-up steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{ActionState, PopulationSpec, MAX_PLAYERS};
use crate::{Error, Real, Result};

/// Recorded in output metadata so runs can be reproduced.
pub const RNG_ALGORITHM: &str =
    "ChaCha8 (rand_chacha 0.9); replicate seeds = SplitMix64(base_seed, replicate)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    AllDefect,
    AllCooperate,
    #[default]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Player selections per replicate, warm-up included.
    pub steps: u64,
    /// Initial steps excluded from the time average.
    pub warmup: u64,
    pub replicates: usize,
    pub seed: u64,
    pub initial_state: InitialState,
    /// Batches used for each replicate's batch-means standard error.
    pub batches: usize,
}

impl Default for SimulationConfig {
    /// 19 replicates of 5,000 steps with 500 discarded.
    fn default() -> Self {
        Self {
            steps: 5_000,
            warmup: 500,
            replicates: 19,
            seed: 0,
            initial_state: InitialState::UniformRandom,
            batches: 100,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup >= self.steps {
            return Err(Error::InvalidConfig(format!(
                "warmup ({}) must be smaller than steps ({})",
                self.warmup, self.steps
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig(
                "at least one replicate is required".into(),
            ));
        }
        if self.batches == 0 {
            return Err(Error::InvalidConfig(
                "at least one batch is required".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    /// Time-averaged fraction of cooperators.
    pub p_hat_c: f64,
    /// Time-averaged cooperation frequency of each player.
    pub player_frequencies: Vec<f64>,
    /// Cooperator fraction averaged over consecutive equal-length batches.
    pub batch_means: Vec<f64>,
}

impl ReplicateOutcome {
    /// Standard error of `p_hat_c` estimated from the batch means.
    pub fn batch_standard_error(&self) -> f64 {
        let b = self.batch_means.len();
        if b < 2 {
            return f64::NAN;
        }
        let mean = self.batch_means.iter().sum::<f64>() / b as f64;
        let var = self
            .batch_means
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>()
            / (b - 1) as f64;
        (var / b as f64).sqrt()
    }
}

/// Order statistics of the replicate estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub replicates: Vec<ReplicateOutcome>,
    pub summary: Summary,
}

impl SimulationResult {
    pub fn per_replicate_p_c(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.p_hat_c).collect()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, extremes, and linearly interpolated quartiles.
pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("replicate estimates"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(Summary {
        count: sorted.len(),
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `replicate`: the `replicate + 1`-th SplitMix64 output
/// from state `base_seed`.
pub fn child_seed(base_seed: u64, replicate: usize) -> u64 {
    const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    splitmix64(base_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(replicate as u64 + 1)))
}

/// Probability that `player` switches when selected in `state`.
pub fn flip_probability<T: Real>(
    pop: &PopulationSpec<T>,
    state: ActionState,
    player: usize,
) -> Result<T> {
    let diff = pop.game().payoff_difference(player, state)?;
    Ok(pop.players()[player].switch_probability(diff, state.cooperates(player)))
}

fn run_replicate<T: Real>(
    pop: &PopulationSpec<T>,
    cfg: &SimulationConfig,
    replicate: usize,
) -> ReplicateOutcome {
    let n = pop.n_players();
    let seed = child_seed(cfg.seed, replicate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let bits = match cfg.initial_state {
        InitialState::AllDefect => 0,
        InitialState::AllCooperate => mask,
        InitialState::UniformRandom => rng.random::<u64>() & mask,
    };
    let mut state = ActionState::from_index(bits, n);
    let game = pop.game();
    let players = pop.players();

    let measured = cfg.steps - cfg.warmup;
    let batches = (cfg.batches as u64).min(measured);
    let mut batch_means = Vec::with_capacity(batches as usize);
    let mut batch_end_idx = 1u64;
    let batch_end = |k: u64| cfg.warmup + k * measured / batches;
    let mut next_batch_end = batch_end(1);
    let mut batch_start = cfg.warmup;
    let mut batch_sum = 0u64;

    let mut cooperator_sum = 0u64;
    // steps spent cooperating per player, settled lazily at each switch
    let mut coop_time = vec![0u64; n];
    let mut since = vec![cfg.warmup; n];

    for t in 1..=cfg.steps {
        let i = rng.random_range(0..n);
        let delta_f = game.payoff_difference_unchecked(i, state);
        let p = players[i].switch_probability(delta_f, state.cooperates(i));
        let u = T::lit(rng.random::<f64>());
        if u < p {
            if t > cfg.warmup {
                if state.cooperates(i) {
                    coop_time[i] += t - 1 - since[i];
                }
                since[i] = t - 1;
            }
            state = state.flip(i);
        }
        if t > cfg.warmup {
            let c = u64::from(state.cooperators());
            cooperator_sum += c;
            batch_sum += c;
            if t == next_batch_end {
                let len = (t - batch_start) * n as u64;
                batch_means.push(batch_sum as f64 / len as f64);
                batch_sum = 0;
                batch_start = t;
                batch_end_idx += 1;
                next_batch_end = batch_end(batch_end_idx.min(batches));
            }
        }
    }
    for i in 0..n {
        if state.cooperates(i) {
            coop_time[i] += cfg.steps - since[i];
        }
    }

    ReplicateOutcome {
        replicate,
        seed,
        p_hat_c: cooperator_sum as f64 / (measured as f64 * n as f64),
        player_frequencies: coop_time
            .iter()
            .map(|&c| c as f64 / measured as f64)
            .collect(),
        batch_means,
    }
}

/// Runs `cfg.replicates` independent chains in parallel.
///
/// Replicate `r` is seeded with [`child_seed`]`(cfg.seed, r)` and results are
/// returned in replicate order, so output is identical for any thread count.
pub fn run_chain<T: Real>(
    pop: &PopulationSpec<T>,
    cfg: &SimulationConfig,
) -> Result<SimulationResult> {
    cfg.validate()?;
    pop.require_finite_beta("the simulator")?;
    if pop.n_players() > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            what: "simulator",
            n_players: pop.n_players(),
            limit: MAX_PLAYERS,
        });
    }
    let replicates: Vec<ReplicateOutcome> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(pop, cfg, r))
        .collect();
    let p_hats: Vec<f64> = replicates.iter().map(|r| r.p_hat_c).collect();
    let summary = summarize(&p_hats)?;
    Ok(SimulationResult {
        replicates,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::build_transition_matrix;
    use crate::model::{GameSpec, PlayerParams};

    fn table1() -> PopulationSpec<f64> {
        let game = GameSpec::pgg(vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 9.0]).unwrap();
        PopulationSpec::uniform(game, PlayerParams::symmetric(2.0, 0.1).unwrap())
    }

    #[test]
    fn summary_single_value() {
        let s = summarize(&[0.2]).unwrap();
        assert_eq!(
            (s.mean, s.q1, s.median, s.q3, s.min, s.max),
            (0.2, 0.2, 0.2, 0.2, 0.2, 0.2)
        );
    }

    #[test]
    fn summary_interpolates() {
        let s = summarize(&[0.4, 0.1, 0.3, 0.2]).unwrap();
        assert!((s.median - 0.25).abs() < 1e-15);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_nineteen_values() {
        // numpy.percentile(xs, [25, 50, 75]) -> 0.475, 0.52, 0.565
        let xs = [
            0.61, 0.43, 0.52, 0.58, 0.49, 0.55, 0.47, 0.60, 0.51, 0.53, 0.45, 0.57, 0.50, 0.54,
            0.48, 0.56, 0.46, 0.59, 0.44,
        ];
        let s = summarize(&xs).unwrap();
        assert!((s.q1 - 0.475).abs() < 1e-12);
        assert!((s.median - 0.52).abs() < 1e-12);
        assert!((s.q3 - 0.565).abs() < 1e-12);
        assert!((s.mean - 0.52).abs() < 1e-12);
        assert_eq!((s.min, s.max), (0.43, 0.61));
    }

    #[test]
    fn config_validation() {
        let bad = SimulationConfig {
            warmup: 10,
            steps: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimulationConfig {
            replicates: 0,
            ..Default::default()
        };
        assert!(run_chain(&table1(), &bad).is_err());
    }

    #[test]
    fn child_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| child_seed(7, r)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(child_seed(7, 0), child_seed(8, 0));
    }

    #[test]
    fn flip_probability_matches_matrix() {
        let games = [
            table1(),
            PopulationSpec::new(
                GameSpec::stag_hunt(1.0, 0.6, 0.1).unwrap(),
                vec![
                    PlayerParams::new(5.0, 0.05, 0.15).unwrap(),
                    PlayerParams::new(1.5, 0.2, 0.0).unwrap(),
                ],
            )
            .unwrap(),
            PopulationSpec::uniform(
                GameSpec::volunteers_dilemma(4, 1.0, 0.3).unwrap(),
                PlayerParams::new(2.0, 0.01, 0.3).unwrap(),
            ),
        ];
        for pop in &games {
            let n = pop.n_players();
            let t = build_transition_matrix(pop).unwrap();
            for s in 0..1usize << n {
                let state = ActionState::new(s as u64, n).unwrap();
                for i in 0..n {
                    let p = flip_probability(pop, state, i).unwrap();
                    let entry = t.entry(s, s ^ (1 << i));
                    assert!((p - n as f64 * entry).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn neutral_coin() {
        let game = GameSpec::pgg(vec![1.0], vec![2.0]).unwrap();
        let pop = PopulationSpec::uniform(game, PlayerParams::new(0.0, 0.0, 0.0).unwrap());
        let cfg = SimulationConfig {
            steps: 1_000_000,
            warmup: 0,
            replicates: 1,
            seed: 3,
            ..Default::default()
        };
        let res = run_chain(&pop, &cfg).unwrap();
        assert!((res.summary.mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn frequencies_are_consistent() {
        let cfg = SimulationConfig {
            steps: 20_000,
            warmup: 1_000,
            replicates: 3,
            seed: 11,
            initial_state: InitialState::AllCooperate,
            batches: 100,
        };
        let res = run_chain(&table1(), &cfg).unwrap();
        for r in &res.replicates {
            let mean_freq = r.player_frequencies.iter().sum::<f64>() / 3.0;
            assert!((mean_freq - r.p_hat_c).abs() < 1e-12);
            assert_eq!(r.batch_means.len(), 100);
            let batch_avg = r.batch_means.iter().sum::<f64>() / 100.0;
            assert!((batch_avg - r.p_hat_c).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&r.p_hat_c));
        }
        assert!(
            (res.summary.mean - res.per_replicate_p_c().iter().sum::<f64>() / 3.0).abs() < 1e-15
        );
    }

    #[test]
    fn rejects_infinite_beta() {
        let pop = PopulationSpec::uniform(
            GameSpec::uniform_pgg(2, 1.0, 1.0).unwrap(),
            PlayerParams::new(f64::INFINITY, 0.1, 0.1).unwrap(),
        );
        assert!(matches!(
            run_chain(&pop, &SimulationConfig::default()),
            Err(Error::InfiniteBeta(_))
        ));
    }
}
