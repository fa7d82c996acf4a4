//! Run configuration: JSON text checked against the bundled schema, then
//! deserialised and expanded into a population.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use introspection::{
    GameSpec, InitialState, PlayerParams, PopulationSpec, SimulationConfig, SolveMethod,
};

use crate::error::{CliError, Result};

/// The published schema (version 1).
pub const SCHEMA: &str = include_str!("../schema/run_config.schema.json");

pub const SCHEMA_VERSION: u64 = 1;

/// A number, or one number per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn len(&self) -> Option<usize> {
        match self {
            OneOrMany::One(_) => None,
            OneOrMany::Many(v) => Some(v.len()),
        }
    }

    /// Broadcasts a scalar to `n` entries; a list must already have `n`.
    pub fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            OneOrMany::One(x) => Ok(vec![*x; n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(CliError::Config(format!(
                "`{field}` has {} entries for {n} players",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GameConfig {
    Pgg {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_players: Option<usize>,
        alphas: OneOrMany,
        multipliers: OneOrMany,
    },
    Bimatrix {
        row: [[f64; 2]; 2],
        col: [[f64; 2]; 2],
    },
    Donation {
        benefit: f64,
        costs: Vec<f64>,
    },
    /// `payoffs[state][player]`, states in bitmask order (player 1 = bit 0).
    Table {
        n_players: usize,
        payoffs: Vec<Vec<f64>>,
    },
}

impl GameConfig {
    pub fn n_players(&self) -> Result<usize> {
        match self {
            GameConfig::Pgg {
                n_players,
                alphas,
                multipliers,
            } => {
                let mut n = *n_players;
                for len in [alphas.len(), multipliers.len()].into_iter().flatten() {
                    match n {
                        Some(m) if m != len => {
                            return Err(CliError::Config(format!(
                                "public goods game lists disagree on the number of players ({m} vs {len})"
                            )))
                        }
                        _ => n = Some(len),
                    }
                }
                n.ok_or_else(|| {
                    CliError::Config(
                        "give `n_players` when `alphas` and `multipliers` are both scalars".into(),
                    )
                })
            }
            GameConfig::Bimatrix { .. } => Ok(2),
            GameConfig::Donation { costs, .. } => Ok(costs.len()),
            GameConfig::Table { n_players, .. } => Ok(*n_players),
        }
    }

    pub fn build(&self) -> Result<GameSpec> {
        let n = self.n_players()?;
        Ok(match self {
            GameConfig::Pgg {
                alphas,
                multipliers,
                ..
            } => GameSpec::pgg(
                alphas.expand(n, "alphas")?,
                multipliers.expand(n, "multipliers")?,
            )?,
            GameConfig::Bimatrix { row, col } => GameSpec::bimatrix(*row, *col)?,
            GameConfig::Donation { benefit, costs } => GameSpec::donation(*benefit, costs.clone())?,
            GameConfig::Table { payoffs, .. } => {
                if payoffs.len() != 1 << n || payoffs.iter().any(|row| row.len() != n) {
                    return Err(CliError::Config(format!(
                        "table payoffs must be {} rows of {n} numbers",
                        1usize << n
                    )));
                }
                GameSpec::table(n, payoffs.concat())?
            }
        })
    }

    pub fn is_pgg(&self) -> bool {
        matches!(self, GameConfig::Pgg { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayersConfig {
    pub beta: OneOrMany,
    /// Symmetric mutation rate, used for whichever of `mu_c`/`mu_d` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_c: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_d: Option<OneOrMany>,
}

impl PlayersConfig {
    pub fn build(&self, n: usize) -> Result<Vec<PlayerParams>> {
        let zero = OneOrMany::One(0.0);
        let pick = |specific: &Option<OneOrMany>| {
            specific
                .as_ref()
                .or(self.mu.as_ref())
                .unwrap_or(&zero)
                .clone()
        };
        let betas = self.beta.expand(n, "beta")?;
        let mu_c = pick(&self.mu_c).expand(n, "mu_c")?;
        let mu_d = pick(&self.mu_d).expand(n, "mu_d")?;
        (0..n)
            .map(|i| {
                PlayerParams::new(betas[i], mu_c[i], mu_d[i])
                    .map_err(|e| CliError::Config(format!("player {}: {e}", i + 1)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    #[default]
    Exact,
    Simulate,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Exact => "exact",
            Method::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Auto,
    Direct,
    Power,
}

impl Solver {
    pub fn method(self) -> SolveMethod {
        match self {
            Solver::Auto => SolveMethod::Auto,
            Solver::Direct => SolveMethod::Direct,
            Solver::Power => SolveMethod::Power,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Solver::Auto => "auto",
            Solver::Direct => "direct",
            Solver::Power => "power",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStateConfig {
    AllDefect,
    AllCooperate,
    #[default]
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialStateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<usize>,
}

impl SimulationSection {
    /// Missing fields take the library defaults.
    pub fn build(&self) -> SimulationConfig {
        let d = SimulationConfig::default();
        SimulationConfig {
            steps: self.steps.unwrap_or(d.steps),
            warmup: self.warmup.unwrap_or(d.warmup),
            replicates: self.replicates.unwrap_or(d.replicates),
            seed: self.seed.unwrap_or(d.seed),
            initial_state: match self.initial_state.unwrap_or_default() {
                InitialStateConfig::AllDefect => InitialState::AllDefect,
                InitialStateConfig::AllCooperate => InitialState::AllCooperate,
                InitialStateConfig::UniformRandom => InitialState::UniformRandom,
            },
            batches: self.batches.unwrap_or(d.batches),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    Mu,
    MuC,
    MuD,
    Alpha,
    Multiplier,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Beta => "beta",
            SweepParameter::Mu => "mu",
            SweepParameter::MuC => "mu_c",
            SweepParameter::MuD => "mu_d",
            SweepParameter::Alpha => "alpha",
            SweepParameter::Multiplier => "multiplier",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u64,
    pub game: GameConfig,
    pub players: PlayersConfig,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn population(&self) -> Result<PopulationSpec> {
        let game = self.game.build()?;
        let players = self.players.build(game.n_players())?;
        Ok(PopulationSpec::new(game, players)?)
    }

    /// The configuration with one sweep value substituted for every player.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> Result<RunConfig> {
        let mut cfg = self.clone();
        let v = OneOrMany::One(value);
        match parameter {
            SweepParameter::Beta => cfg.players.beta = v,
            SweepParameter::Mu => {
                cfg.players.mu = Some(v);
                cfg.players.mu_c = None;
                cfg.players.mu_d = None;
            }
            SweepParameter::MuC => cfg.players.mu_c = Some(v),
            SweepParameter::MuD => cfg.players.mu_d = Some(v),
            SweepParameter::Alpha | SweepParameter::Multiplier => {
                let n = self.game.n_players()?;
                let GameConfig::Pgg {
                    n_players,
                    alphas,
                    multipliers,
                } = &mut cfg.game
                else {
                    return Err(CliError::Config(format!(
                        "sweeping `{}` needs a public goods game",
                        parameter.name()
                    )));
                };
                *n_players = Some(n);
                if parameter == SweepParameter::Alpha {
                    *alphas = v;
                } else {
                    *multipliers = v;
                }
            }
        }
        Ok(cfg)
    }
}

/// A configuration as it will actually run: overrides applied, checked, and
/// hashed.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    /// The effective document, re-serialised so it can be fed back in.
    pub document: Value,
    pub config: RunConfig,
    pub sha256: String,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub seed: Option<u64>,
}

pub fn validate_schema(document: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("bundled schema compiles");
    let problems: Vec<String> = validator
        .iter_errors(document)
        .map(|e| {
            let at = e.instance_path().to_string();
            format!("  at '{}': {e}", if at.is_empty() { "/" } else { &at })
        })
        .collect();
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Schema(problems.join("\n")))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Schema check, overrides, then deserialisation.
pub fn load_value(document: Value, overrides: &Overrides) -> Result<LoadedConfig> {
    validate_schema(&document)?;
    let mut config: RunConfig =
        serde_json::from_value(document).map_err(|e| CliError::Schema(format!("  {e}")))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(CliError::Schema(format!(
            "  unsupported schema_version {}",
            config.schema_version
        )));
    }
    if let Some(m) = overrides.method {
        config.method = m;
    }
    if let Some(seed) = overrides.seed {
        config.simulation.seed = Some(seed);
    }
    // pin the seed so the recorded config reproduces the run on its own
    if config.method == Method::Simulate && config.simulation.seed.is_none() {
        config.simulation.seed = Some(SimulationConfig::default().seed);
    }
    let document = serde_json::to_value(&config).expect("config serialises");
    let sha256 = sha256_hex(document.to_string().as_bytes());
    Ok(LoadedConfig {
        document,
        config,
        sha256,
    })
}

pub fn load_str(text: &str, overrides: &Overrides) -> Result<LoadedConfig> {
    let document: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Schema(format!("  not valid JSON: {e}")))?;
    load_value(document, overrides)
}

pub fn load_file(path: &Path, overrides: &Overrides) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    load_str(&text, overrides)
}
