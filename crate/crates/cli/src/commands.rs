//! `solve`, `simulate` and `check`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use introspection::additivity::{check_additivity, PlayerAdditivity, DEFAULT_TOLERANCE};
use introspection::closed_form::{
    additive_players, group_cooperation, pgg_players, product_measure,
};
use introspection::exact::solve as exact_solve;
use introspection::simulate::{run_chain, RNG_ALGORITHM};
use introspection::{PopulationSpec, SimulationResult, StationaryDistribution};

use crate::config::{Format, LoadedConfig, Method, OutputConfig, RunConfig, SweepConfig};
use crate::error::Result;
use crate::output::{num, write_csv, write_json, Metadata, Table, Written};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "INTROSPECT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "introspect-out";

/// Largest population whose full distribution is written out.
pub const STATIONARY_MAX_PLAYERS: usize = 16;

/// `--out`, then the config's `output.path`, then the environment, then
/// [`DEFAULT_OUT_DIR`].
pub fn resolve_out_dir(flag: Option<&Path>, output: Option<&OutputConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| output.and_then(|o| o.path.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// State indices in table order: player 1 leftmost and slowest, D before C
/// (`DDD, DDC, DCD, ...`).
pub fn table_order(n_players: usize) -> Vec<usize> {
    (0..1usize << n_players)
        .map(|k| k.reverse_bits() >> (usize::BITS as usize - n_players))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Per-player constant payoff difference (closed form only).
    pub deltas: Option<Vec<f64>>,
    pub marginals: Vec<f64>,
    pub p_c: f64,
    pub stationary: Option<StationaryDistribution>,
}

/// Product-measure route. Public goods games use their analytic deltas, so
/// any size works; other games are scanned for additivity first.
pub fn solve_closed_form(cfg: &RunConfig, pop: &PopulationSpec) -> Result<Solution> {
    let forms = if cfg.game.is_pgg() {
        pgg_players(pop.game(), pop.players())?
    } else {
        additive_players(pop, DEFAULT_TOLERANCE)?
    };
    let marginals: Vec<f64> = forms.iter().map(|f| f.p).collect();
    let stationary = if pop.n_players() <= STATIONARY_MAX_PLAYERS {
        Some(product_measure(&marginals)?)
    } else {
        None
    };
    Ok(Solution {
        deltas: Some(forms.iter().map(|f| f.delta).collect()),
        p_c: group_cooperation(&marginals)?,
        marginals,
        stationary,
    })
}

pub fn solve_exact(cfg: &RunConfig, pop: &PopulationSpec) -> Result<Solution> {
    let pi = exact_solve(pop, cfg.solver.method())?;
    Ok(Solution {
        deltas: None,
        marginals: pi.marginals(),
        p_c: pi.cooperation_probability(),
        stationary: (pop.n_players() <= STATIONARY_MAX_PLAYERS).then_some(pi),
    })
}

pub fn stationary_table(pi: &StationaryDistribution) -> Table {
    let n = pi.n_players();
    let mut t = Table::new(&["state_label", "state_index", "probability"]);
    for idx in table_order(n) {
        t.push(vec![
            introspection::model::state_label(idx, n),
            idx.to_string(),
            num(pi.prob(idx)),
        ]);
    }
    t
}

fn players_table(pop: &PopulationSpec, sol: &Solution) -> Table {
    let mut t = Table::new(&[
        "player",
        "beta",
        "mu_c",
        "mu_d",
        "delta",
        "cooperation_probability",
    ]);
    for (i, p) in pop.players().iter().enumerate() {
        let delta = sol.deltas.as_ref().map(|d| num(d[i])).unwrap_or_default();
        t.push(vec![
            (i + 1).to_string(),
            num(p.beta()),
            num(p.mu_c()),
            num(p.mu_d()),
            delta,
            num(sol.marginals[i]),
        ]);
    }
    t
}

fn base_metadata(command: &str, loaded: &LoadedConfig) -> Metadata {
    let cfg = &loaded.config;
    let mut m = Metadata::new(command);
    m.push("method", cfg.method.name());
    match cfg.method {
        Method::Exact => {
            m.push("solver", cfg.solver.name());
        }
        Method::Simulate => {
            let sim = cfg.simulation.build();
            m.push("seed", sim.seed);
            m.push("rng", RNG_ALGORITHM);
        }
        Method::ClosedForm => {}
    }
    m.push(
        "state_order",
        "player 1 leftmost, D before C; state_index bit i = player i+1 cooperates",
    );
    m.push("config_sha256", &loaded.sha256);
    m.push("config", loaded.document.to_string());
    m
}

fn emit(
    out_dir: &Path,
    stem: &str,
    format: Format,
    meta: &Metadata,
    tables: &[(&str, &Table)],
    written: &mut Written,
) -> Result<()> {
    match format {
        Format::Csv => {
            for (name, table) in tables {
                let path = out_dir.join(format!("{name}_{stem}.csv"));
                write_csv(&path, meta, table)?;
                written.files.push(path);
            }
        }
        Format::Json => {
            let path = out_dir.join(format!("{stem}.json"));
            write_json(&path, meta, tables)?;
            written.files.push(path);
        }
    }
    Ok(())
}

/// What a command produced: files plus a short human summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub written: Written,
    pub summary: String,
}

fn simulate_population(cfg: &RunConfig, pop: &PopulationSpec) -> Result<SimulationResult> {
    Ok(run_chain(pop, &cfg.simulation.build())?)
}

fn summary_row(res: &SimulationResult) -> Vec<String> {
    let s = &res.summary;
    vec![
        s.count.to_string(),
        num(s.mean),
        num(s.min),
        num(s.q1),
        num(s.median),
        num(s.q3),
        num(s.max),
    ]
}

const SUMMARY_COLUMNS: [&str; 7] = ["count", "mean", "min", "q1", "median", "q3", "max"];

/// Runs the configured method (a sweep if one is given) and writes its
/// tables to `out_dir`.
pub fn cmd_solve(loaded: &LoadedConfig, out_dir: &Path) -> Result<Report> {
    let cfg = &loaded.config;
    if let Some(sweep) = &cfg.sweep {
        return run_sweep(loaded, sweep, out_dir);
    }
    let pop = cfg.population()?;
    let format = cfg.output.format;
    let meta = base_metadata("solve", loaded);
    let stem = cfg.method.name();
    let mut report = Report::default();
    match cfg.method {
        Method::ClosedForm | Method::Exact => {
            let sol = if cfg.method == Method::Exact {
                solve_exact(cfg, &pop)?
            } else {
                solve_closed_form(cfg, &pop)?
            };
            let players = players_table(&pop, &sol);
            let stationary = sol.stationary.as_ref().map(stationary_table);
            let mut tables = vec![("players", &players)];
            if let Some(t) = &stationary {
                tables.insert(0, ("stationary", t));
            }
            emit(out_dir, stem, format, &meta, &tables, &mut report.written)?;
            report.summary = format!("p_C = {}", num(sol.p_c));
        }
        Method::Simulate => {
            let res = simulate_population(cfg, &pop)?;
            let (replicates, summary) = simulation_tables(&res);
            emit(
                out_dir,
                stem,
                format,
                &meta,
                &[("replicates", &replicates), ("summary", &summary)],
                &mut report.written,
            )?;
            report.summary = format!(
                "p_C mean = {} over {} replicates (min {}, max {})",
                num(res.summary.mean),
                res.summary.count,
                num(res.summary.min),
                num(res.summary.max)
            );
        }
    }
    Ok(report)
}

/// `simulate`: `solve` with the method forced to simulation.
pub fn cmd_simulate(loaded: &LoadedConfig, out_dir: &Path) -> Result<Report> {
    debug_assert_eq!(loaded.config.method, Method::Simulate);
    cmd_solve(loaded, out_dir)
}

fn simulation_tables(res: &SimulationResult) -> (Table, Table) {
    let mut replicates = Table::new(&["replicate", "seed", "p_hat_C"]);
    for r in &res.replicates {
        replicates.push(vec![
            r.replicate.to_string(),
            r.seed.to_string(),
            num(r.p_hat_c),
        ]);
    }
    let mut summary = Table::new(&SUMMARY_COLUMNS);
    summary.push(summary_row(res));
    (replicates, summary)
}

fn run_sweep(loaded: &LoadedConfig, sweep: &SweepConfig, out_dir: &Path) -> Result<Report> {
    let cfg = &loaded.config;
    let n = cfg.game.n_players()?;
    let param = sweep.parameter.name();
    let mut header: Vec<String> = vec![param.to_string()];
    if cfg.method == Method::Simulate {
        header.extend(SUMMARY_COLUMNS.iter().map(|s| s.to_string()));
    } else {
        header.push("p_C".into());
        header.extend((1..=n).map(|i| format!("p_{i}")));
    }
    let rows = sweep
        .values
        .par_iter()
        .map(|&v| -> Result<Vec<String>> {
            let point = cfg.with_sweep_value(sweep.parameter, v)?;
            let pop = point.population()?;
            let mut row = vec![num(v)];
            match cfg.method {
                Method::Simulate => row.extend(summary_row(&simulate_population(&point, &pop)?)),
                method => {
                    let sol = if method == Method::Exact {
                        solve_exact(&point, &pop)?
                    } else {
                        solve_closed_form(&point, &pop)?
                    };
                    row.push(num(sol.p_c));
                    row.extend(sol.marginals.iter().map(|&p| num(p)));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let table = Table { header, rows };
    let mut meta = base_metadata("solve", loaded);
    meta.push("sweep", param);
    let mut report = Report::default();
    emit(
        out_dir,
        cfg.method.name(),
        cfg.output.format,
        &meta,
        &[("sweep", &table)],
        &mut report.written,
    )?;
    report.summary = format!("{} sweep points over `{param}`", table.rows.len());
    Ok(report)
}

/// Human-readable additivity report (players numbered from 1).
pub fn cmd_check(loaded: &LoadedConfig) -> Result<String> {
    let game = loaded.config.game.build()?;
    let report = check_additivity(&game, DEFAULT_TOLERANCE)?;
    let mut s = String::new();
    let verdict = if report.game_additive() {
        "additive"
    } else {
        "not additive"
    };
    writeln!(s, "game: {} players, {verdict}", game.n_players()).unwrap();
    for (i, p) in report.per_player.iter().enumerate() {
        match p {
            PlayerAdditivity::Additive { delta } => {
                writeln!(s, "player {}: additive, delta = {}", i + 1, num(*delta)).unwrap()
            }
            PlayerAdditivity::NotAdditive {
                context_a,
                context_b,
                diff_a,
                diff_b,
            } => writeln!(
                s,
                "player {}: not additive; payoff difference {} in context {} but {} in context {}",
                i + 1,
                num(*diff_a),
                context_a,
                num(*diff_b),
                context_b
            )
            .unwrap(),
        }
    }
    if let Some(deltas) = report.deltas() {
        let list: Vec<String> = deltas.iter().map(|d| num(*d)).collect();
        writeln!(s, "deltas: [{}]", list.join(", ")).unwrap();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_order_matches_labels() {
        let labels: Vec<String> = table_order(3)
            .into_iter()
            .map(|i| introspection::model::state_label(i, 3))
            .collect();
        assert_eq!(
            labels,
            ["DDD", "DDC", "DCD", "DCC", "CDD", "CDC", "CCD", "CCC"]
        );
        assert_eq!(table_order(1), [0, 1]);
    }

    #[test]
    fn out_dir_precedence() {
        let cfg = OutputConfig {
            path: Some("from-config".into()),
            format: Format::Csv,
        };
        assert_eq!(
            resolve_out_dir(Some(Path::new("flag")), Some(&cfg)),
            PathBuf::from("flag")
        );
        assert_eq!(
            resolve_out_dir(None, Some(&cfg)),
            PathBuf::from("from-config")
        );
    }
}
