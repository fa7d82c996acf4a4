//! Baked-in sweeps behind `introspect figure`.

use std::ops::RangeInclusive;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Value};

use introspection::closed_form::{pgg_cooperation_probability, pgg_player};
use introspection::exact::solve as exact_solve;
use introspection::simulate::{child_seed, run_chain, RNG_ALGORITHM};
use introspection::{
    GameSpec, InitialState, PlayerParams, PopulationSpec, SimulationConfig, SimulationResult,
    SolveMethod,
};

use crate::commands::{solve_closed_form, solve_exact, table_order, Report};
use crate::config::{load_str, sha256_hex, Overrides};
use crate::error::Result;
use crate::output::{num, write_csv, Metadata, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    Table1,
}

impl FigureName {
    pub fn name(self) -> &'static str {
        match self {
            FigureName::Fig1 => "fig1",
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::Table1 => "table1",
        }
    }
}

/// The table-1 population as a run configuration; `solve` on this file
/// reproduces the `table1` figure.
pub const TABLE1_CONFIG: &str = include_str!("../configs/table1.json");

pub const FIG1_SIZES: RangeInclusive<usize> = 2..=50;
/// Largest group size given an exact column.
pub const FIG1_EXACT_MAX: usize = 14;
pub const FIG1_BETA: f64 = 0.5;
pub const FIG1_MU_C: f64 = 0.05;
pub const FIG1_MU_D: f64 = 0.15;

/// The two panels of the validation figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig1Panel {
    /// `r = 2N`: cooperation favoured.
    DoubleN,
    /// `r = N/2`: defection favoured.
    HalfN,
}

impl Fig1Panel {
    pub const ALL: [Fig1Panel; 2] = [Fig1Panel::DoubleN, Fig1Panel::HalfN];

    pub fn multiplier(self, n: usize) -> f64 {
        match self {
            Fig1Panel::DoubleN => 2.0 * n as f64,
            Fig1Panel::HalfN => n as f64 / 2.0,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Fig1Panel::DoubleN => "r2N",
            Fig1Panel::HalfN => "rN2",
        }
    }

    fn index(self) -> usize {
        match self {
            Fig1Panel::DoubleN => 0,
            Fig1Panel::HalfN => 1,
        }
    }
}

/// `N` players with `alpha_i = i` and the figure's shared parameters.
pub fn fig1_population(panel: Fig1Panel, n: usize) -> Result<PopulationSpec> {
    let alphas = (1..=n).map(|i| i as f64).collect();
    let game = GameSpec::pgg(alphas, vec![panel.multiplier(n); n])?;
    Ok(PopulationSpec::uniform(
        game,
        PlayerParams::new(FIG1_BETA, FIG1_MU_C, FIG1_MU_D)?,
    ))
}

/// 19 runs of 5,000 steps, the first 500 discarded. Every (panel, N) point
/// gets its own base seed derived from `seed`.
pub fn fig1_simulation(seed: u64, panel: Fig1Panel, n: usize) -> SimulationConfig {
    SimulationConfig {
        steps: 5_000,
        warmup: 500,
        replicates: 19,
        seed: child_seed(seed, panel.index() * 1000 + n),
        initial_state: InitialState::UniformRandom,
        batches: 100,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Point {
    pub panel: Fig1Panel,
    pub n: usize,
    pub closed_form: f64,
    pub exact: Option<f64>,
    pub simulation: SimulationResult,
}

pub fn fig1_point(panel: Fig1Panel, n: usize, seed: u64) -> Result<Fig1Point> {
    let pop = fig1_population(panel, n)?;
    let closed_form = pgg_cooperation_probability(pop.game(), pop.players())?;
    let exact = if n <= FIG1_EXACT_MAX {
        Some(exact_solve(&pop, SolveMethod::Auto)?.cooperation_probability())
    } else {
        None
    };
    let simulation = run_chain(&pop, &fig1_simulation(seed, panel, n))?;
    Ok(Fig1Point {
        panel,
        n,
        closed_form,
        exact,
        simulation,
    })
}

pub fn fig1(seed: u64) -> Result<Vec<Fig1Point>> {
    let jobs: Vec<(Fig1Panel, usize)> = Fig1Panel::ALL
        .iter()
        .flat_map(|&p| FIG1_SIZES.map(move |n| (p, n)))
        .collect();
    jobs.into_par_iter()
        .map(|(p, n)| fig1_point(p, n, seed))
        .collect()
}

pub const FIG2_N: usize = 5;
pub const FIG2_MU: f64 = 0.1;

/// One evaluated point of the structural figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Point {
    pub r: f64,
    pub beta: f64,
    pub alpha: f64,
    pub p: f64,
}

/// `count + 1` evenly spaced values on `[0, max]`, computed from the index
/// so no rounding error accumulates.
fn grid(max: f64, count: usize) -> impl Iterator<Item = f64> + Clone {
    (0..=count).map(move |k| max * k as f64 / count as f64)
}

fn fig2_eval(alpha: f64, r: f64, beta: f64) -> Result<Fig2Point> {
    let params = PlayerParams::symmetric(beta, FIG2_MU)?;
    Ok(Fig2Point {
        r,
        beta,
        alpha,
        p: pgg_player(alpha, r, FIG2_N, &params)?.p,
    })
}

pub const FIG2_LEFT_MULTIPLIERS: [f64; 3] = [3.0, 5.0, 7.0];
pub const FIG2_CENTRE_MULTIPLIERS: [f64; 2] = [3.0, 7.0];
pub const FIG2_CENTRE_BETAS: [f64; 2] = [0.5, 2.0];

/// Left panel: `p_i` against `beta` at `alpha = 2`, one curve per `r`.
pub fn fig2_left() -> Result<Vec<Fig2Point>> {
    FIG2_LEFT_MULTIPLIERS
        .iter()
        .flat_map(|&r| grid(5.0, 100).map(move |b| (r, b)))
        .map(|(r, b)| fig2_eval(2.0, r, b))
        .collect()
}

/// Centre panel: `p_i` against `alpha`, one curve per `(r, beta)`.
pub fn fig2_centre() -> Result<Vec<Fig2Point>> {
    let mut out = Vec::new();
    for &r in &FIG2_CENTRE_MULTIPLIERS {
        for &beta in &FIG2_CENTRE_BETAS {
            for alpha in grid(5.0, 100).skip(1) {
                out.push(fig2_eval(alpha, r, beta)?);
            }
        }
    }
    Ok(out)
}

/// Right panel: the `(alpha, r)` surface at `beta = 0`.
pub fn fig2_right() -> Result<Vec<Fig2Point>> {
    let mut out = Vec::new();
    for alpha in grid(5.0, 20).skip(1) {
        for r in grid(3.0 * FIG2_N as f64, 30).skip(1) {
            out.push(fig2_eval(alpha, r, 0.0)?);
        }
    }
    Ok(out)
}

pub const FIG3_SIZES: [usize; 2] = [5, 200];
pub const FIG3_MUTATION: [f64; 3] = [0.0, 0.1, 0.25];
pub const FIG3_ALPHA: f64 = 2.0;
pub const FIG3_MULTIPLIER: f64 = 7.0;
pub const FIG3_BETA_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig3Point {
    pub n: usize,
    pub mu: f64,
    pub beta: f64,
    pub p: f64,
}

/// `beta` sweeps at `(r, alpha) = (7, 2)` for each group size and symmetric
/// mutation rate.
pub fn fig3() -> Result<Vec<Fig3Point>> {
    let mut out = Vec::new();
    for &n in &FIG3_SIZES {
        for &mu in &FIG3_MUTATION {
            for beta in grid(FIG3_BETA_MAX, 200) {
                let params = PlayerParams::symmetric(beta, mu)?;
                out.push(Fig3Point {
                    n,
                    mu,
                    beta,
                    p: pgg_player(FIG3_ALPHA, FIG3_MULTIPLIER, n, &params)?.p,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub state_label: String,
    pub state_index: usize,
    pub formula: f64,
    pub exact: f64,
}

pub fn table1() -> Result<Vec<Table1Row>> {
    let loaded = load_str(TABLE1_CONFIG, &Overrides::default())?;
    let pop = loaded.config.population()?;
    let formula = solve_closed_form(&loaded.config, &pop)?
        .stationary
        .expect("three players");
    let exact = solve_exact(&loaded.config, &pop)?
        .stationary
        .expect("three players");
    Ok(table_order(pop.n_players())
        .into_iter()
        .map(|idx| Table1Row {
            state_label: introspection::model::state_label(idx, pop.n_players()),
            state_index: idx,
            formula: formula.prob(idx),
            exact: exact.prob(idx),
        })
        .collect())
}

fn figure_metadata(name: FigureName, parameters: Value) -> Metadata {
    let mut m = Metadata::new(&format!("figure {}", name.name()));
    m.push(
        "parameters_sha256",
        sha256_hex(parameters.to_string().as_bytes()),
    );
    m.push("parameters", parameters);
    m
}

fn fig2_table(points: &[Fig2Point], columns: &[&str]) -> Table {
    let mut t = Table::new(columns);
    for p in points {
        let row = columns
            .iter()
            .map(|c| match *c {
                "r" => num(p.r),
                "beta" => num(p.beta),
                "alpha" => num(p.alpha),
                _ => num(p.p),
            })
            .collect();
        t.push(row);
    }
    t
}

/// Computes a figure's data and writes its CSV bundle to `out_dir`.
pub fn cmd_figure(name: FigureName, out_dir: &Path, seed: u64) -> Result<Report> {
    let mut report = Report::default();
    let mut write = |file: String, meta: &Metadata, table: &Table| -> Result<()> {
        let path = out_dir.join(file);
        write_csv(&path, meta, table)?;
        report.written.files.push(path);
        Ok(())
    };
    match name {
        FigureName::Fig1 => {
            let mut meta = figure_metadata(
                name,
                json!({
                    "game": "pgg", "alpha": "alpha_i = i", "multiplier": {"r2N": "2N", "rN2": "N/2"},
                    "beta": FIG1_BETA, "mu_c": FIG1_MU_C, "mu_d": FIG1_MU_D,
                    "n": [FIG1_SIZES.start(), FIG1_SIZES.end()], "exact_max_n": FIG1_EXACT_MAX,
                    "steps": 5000, "warmup": 500, "replicates": 19,
                }),
            );
            meta.push("method", "closed_form,exact,simulate");
            meta.push("seed", seed);
            meta.push("rng", RNG_ALGORITHM);
            meta.push(
                "seed_scheme",
                "point base seed = child_seed(seed, 1000 * panel + N), panel 0 = r2N, 1 = rN2",
            );
            meta.push(
                "n_grid",
                "closed form and simulation for N = 2..50; exact for N <= 14, blank beyond",
            );
            meta.push(
                "step",
                "one step selects one player; initial state uniform over all states",
            );
            meta.push(
                "quartiles",
                "linear interpolation between order statistics; whiskers = min and max",
            );
            let points = fig1(seed)?;
            for panel in Fig1Panel::ALL {
                let mut summary = Table::new(&[
                    "n",
                    "closed_form",
                    "exact",
                    "sim_mean",
                    "sim_min",
                    "sim_q1",
                    "sim_median",
                    "sim_q3",
                    "sim_max",
                ]);
                let mut reps = Table::new(&["n", "replicate", "seed", "p_hat_C"]);
                for pt in points.iter().filter(|p| p.panel == panel) {
                    let s = &pt.simulation.summary;
                    summary.push(vec![
                        pt.n.to_string(),
                        num(pt.closed_form),
                        pt.exact.map(num).unwrap_or_default(),
                        num(s.mean),
                        num(s.min),
                        num(s.q1),
                        num(s.median),
                        num(s.q3),
                        num(s.max),
                    ]);
                    for r in &pt.simulation.replicates {
                        reps.push(vec![
                            pt.n.to_string(),
                            r.replicate.to_string(),
                            r.seed.to_string(),
                            num(r.p_hat_c),
                        ]);
                    }
                }
                write(format!("fig1_{}.csv", panel.tag()), &meta, &summary)?;
                write(format!("fig1_{}_replicates.csv", panel.tag()), &meta, &reps)?;
            }
        }
        FigureName::Fig2 => {
            let mut meta = figure_metadata(
                name,
                json!({
                    "game": "pgg", "n": FIG2_N, "mu": FIG2_MU,
                    "left": {"alpha": 2.0, "r": FIG2_LEFT_MULTIPLIERS, "beta": "0..5 step 0.05"},
                    "centre": {"r": FIG2_CENTRE_MULTIPLIERS, "beta": FIG2_CENTRE_BETAS, "alpha": "0.05..5 step 0.05"},
                    "right": {"beta": 0.0, "alpha": "0.25..5 step 0.25", "r": "0.5..15 step 0.5"},
                }),
            );
            meta.push("method", "closed_form");
            write(
                "fig2_left.csv".into(),
                &meta,
                &fig2_table(&fig2_left()?, &["r", "beta", "p"]),
            )?;
            write(
                "fig2_centre.csv".into(),
                &meta,
                &fig2_table(&fig2_centre()?, &["r", "beta", "alpha", "p"]),
            )?;
            write(
                "fig2_right.csv".into(),
                &meta,
                &fig2_table(&fig2_right()?, &["alpha", "r", "p"]),
            )?;
        }
        FigureName::Fig3 => {
            let mut meta = figure_metadata(
                name,
                json!({
                    "game": "pgg", "alpha": FIG3_ALPHA, "r": FIG3_MULTIPLIER, "n": FIG3_SIZES,
                    "mu": FIG3_MUTATION, "beta": "0..10 step 0.05",
                }),
            );
            meta.push("method", "closed_form");
            let mut t = Table::new(&["n", "mu", "beta", "p"]);
            for p in fig3()? {
                t.push(vec![p.n.to_string(), num(p.mu), num(p.beta), num(p.p)]);
            }
            write("fig3.csv".into(), &meta, &t)?;
        }
        FigureName::Table1 => {
            let loaded = load_str(TABLE1_CONFIG, &Overrides::default())?;
            let mut meta = figure_metadata(name, loaded.document.clone());
            meta.push("method", "closed_form,exact");
            meta.push("config_sha256", &loaded.sha256);
            meta.push(
                "state_order",
                "player 1 leftmost, D before C; state_index bit i = player i+1 cooperates",
            );
            let mut t = Table::new(&["state_label", "state_index", "formula", "exact"]);
            for row in table1()? {
                t.push(vec![
                    row.state_label,
                    row.state_index.to_string(),
                    num(row.formula),
                    num(row.exact),
                ]);
            }
            write("table1.csv".into(), &meta, &t)?;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_hit_their_endpoints() {
        let g: Vec<f64> = grid(5.0, 100).collect();
        assert_eq!((g.len(), g[0], g[100]), (101, 0.0, 5.0));
        assert_eq!(g[1], 0.05);
    }

    #[test]
    fn fig2_right_is_flat_at_half() {
        let pts = fig2_right().unwrap();
        assert_eq!(pts.len(), 20 * 30);
        assert!(pts.iter().all(|p| p.p == 0.5));
    }

    #[test]
    fn fig1_exact_column_stops_at_cap() {
        let small = fig1_point(Fig1Panel::HalfN, 3, 0).unwrap();
        assert!((small.exact.unwrap() - small.closed_form).abs() < 1e-10);
        let seeds = (
            fig1_simulation(0, Fig1Panel::DoubleN, 3).seed,
            fig1_simulation(0, Fig1Panel::HalfN, 3).seed,
        );
        assert_ne!(seeds.0, seeds.1);
    }
}
