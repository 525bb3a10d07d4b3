//! Experiment configuration files (TOML).
//!
//! ```toml
//! [experiment]
//! benchmark = "flags"            # built-in name, or give `grid` + `automaton` paths
//! # grid = "../flags.grid"       # paths are relative to the config file
//! # automaton = "../flags.hoa"
//! # baseline_rule = "flags"      # buttons | flags | rendezvous
//! mode = "both"                  # shaped | baseline | both
//! seeds = [1, 2, 3, 4, 5]
//! episodes = 150000
//! episode_length = 100
//! agents = 2
//! output_dir = "out"
//! csv_every = 1                  # keep every n-th episode in the CSV
//!
//! [shaping]
//! gamma = 0.999
//! gamma_b = 0.99
//! trap_reward = -1.0
//! epsilon_order = "epsilon-first" # label-first reverses the ε/label order (oracle mutation check)
//!
//! [schedule.explore]
//! start = 1.0
//! end = 0.01
//! kind = "linear"                # linear | exponential
//!
//! [schedule.learning_rate]
//! start = 1.0
//! end = 0.001
//!
//! [baseline]
//! sync_reward = 2.0
//! goal_reward = 10.0
//!
//! [oracle]
//! steps = 10000
//! episode_length = 100
//! state_cap = 1000000
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::automaton::{AutomatonError, Ldba};
use crate::bench::{BaselineRule, BenchError, Benchmark, Mode, RuleKind, TrainingSettings};
use crate::gridworld::{parse_grid, GridError};
use crate::hoa::{parse_hoa, HoaError};
use crate::learner::{Schedule, ScheduleKind};
use crate::oracle::DEFAULT_STATE_CAP;
use crate::shaping::{EpsilonOrder, ShapingConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Hoa { path: PathBuf, source: HoaError },
    #[error("{}: {source}", path.display())]
    Automaton { path: PathBuf, source: AutomatonError },
    #[error("{}: {source}", path.display())]
    Grid { path: PathBuf, source: GridError },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Bench(#[from] BenchError),
}

impl ConfigError {
    pub fn is_io(&self) -> bool {
        matches!(self, ConfigError::Io { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSelection {
    #[default]
    Shaped,
    Baseline,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Shaped => vec![Mode::Shaped],
            ModeSelection::Baseline => vec![Mode::Baseline],
            ModeSelection::Both => vec![Mode::Shaped, Mode::Baseline],
        }
    }
}

impl std::str::FromStr for ModeSelection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shaped" => Ok(ModeSelection::Shaped),
            "baseline" => Ok(ModeSelection::Baseline),
            "both" => Ok(ModeSelection::Both),
            _ => Err(format!("unknown mode '{s}' (expected shaped, baseline or both)")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub benchmark: Option<String>,
    pub grid: Option<PathBuf>,
    pub automaton: Option<PathBuf>,
    pub baseline_rule: Option<String>,
    #[serde(default)]
    pub mode: ModeSelection,
    pub seeds: Vec<u64>,
    pub episodes: Option<usize>,
    pub episode_length: Option<usize>,
    #[serde(default = "default_agents")]
    pub agents: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_csv_every")]
    pub csv_every: usize,
}

fn default_agents() -> usize {
    2
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum OrderName {
    #[default]
    EpsilonFirst,
    LabelFirst,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapingSection {
    pub gamma: f64,
    pub gamma_b: f64,
    pub trap_reward: f64,
    epsilon_order: OrderName,
}

impl Default for ShapingSection {
    fn default() -> Self {
        let d = ShapingConfig::default();
        ShapingSection { gamma: d.gamma, gamma_b: d.gamma_b, trap_reward: d.trap_reward, epsilon_order: OrderName::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
enum KindName {
    #[default]
    Linear,
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    kind: KindName,
}

impl ScheduleEntry {
    fn schedule(&self) -> Schedule {
        let kind = match self.kind {
            KindName::Linear => ScheduleKind::Linear,
            KindName::Exponential => ScheduleKind::Exponential,
        };
        Schedule { start: self.start, end: self.end, steps: 0, kind }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub explore: ScheduleEntry,
    pub learning_rate: ScheduleEntry,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection {
            explore: ScheduleEntry { start: 1.0, end: 0.01, kind: KindName::Linear },
            learning_rate: ScheduleEntry { start: 1.0, end: 0.001, kind: KindName::Linear },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub sync_reward: f64,
    pub goal_reward: f64,
}

impl Default for BaselineSection {
    fn default() -> Self {
        BaselineSection { sync_reward: 2.0, goal_reward: 10.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub steps: usize,
    pub episode_length: usize,
    pub state_cap: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { steps: 10_000, episode_length: 100, state_cap: DEFAULT_STATE_CAP }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub shaping: ShapingSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub baseline: BaselineSection,
    #[serde(default)]
    pub oracle: OracleSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base).map_err(|e| match e {
            ConfigError::Parse { msg, .. } => ConfigError::Parse { path: path.into(), msg },
            other => other,
        })
    }

    /// Parses and validates config text. `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::from("<config>"), msg: e.to_string() })?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let s = &self.shaping;
        if !(0.0 < s.gamma_b && s.gamma_b <= s.gamma && s.gamma < 1.0) {
            return bad(format!("need 0 < gamma_b <= gamma < 1, got gamma_b = {}, gamma = {}", s.gamma_b, s.gamma));
        }
        if !s.trap_reward.is_finite() {
            return bad("trap_reward must be finite".into());
        }
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if e.agents == 0 {
            return bad("agents must be positive".into());
        }
        match (&e.benchmark, &e.grid, &e.automaton) {
            (Some(_), None, None) | (None, Some(_), Some(_)) => {}
            (Some(_), _, _) => return bad("give either benchmark or grid + automaton, not both".into()),
            _ => return bad("missing benchmark (or grid + automaton)".into()),
        }
        for (name, sch) in [("explore", &self.schedule.explore), ("learning_rate", &self.schedule.learning_rate)] {
            if !(sch.start >= sch.end && sch.end > 0.0 && sch.start <= 1.0) {
                return bad(format!("schedule.{name}: need 1 >= start >= end > 0"));
            }
        }
        let b = &self.baseline;
        if !(b.sync_reward.is_finite() && b.goal_reward.is_finite()) {
            return bad("baseline rewards must be finite".into());
        }
        if self.oracle.episode_length == 0 {
            return bad("oracle.episode_length must be positive".into());
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn shaping_config(&self) -> ShapingConfig {
        ShapingConfig {
            gamma: self.shaping.gamma,
            gamma_b: self.shaping.gamma_b,
            trap_reward: self.shaping.trap_reward,
            epsilon_order: match self.shaping.epsilon_order {
                OrderName::EpsilonFirst => EpsilonOrder::EpsilonFirst,
                OrderName::LabelFirst => EpsilonOrder::LabelFirst,
            },
        }
    }

    /// Loads (and checks) the benchmark, applying overrides from the config.
    pub fn benchmark(&self) -> Result<Benchmark, ConfigError> {
        let e = &self.experiment;
        let mut b = match (&e.benchmark, &e.grid, &e.automaton) {
            (Some(name), _, _) => Benchmark::builtin(name)?,
            (None, Some(grid), Some(automaton)) => {
                let grid_path = self.resolve(grid);
                let hoa_path = self.resolve(automaton);
                let grid = load_grid(&grid_path)?;
                let ldba = load_automaton(&hoa_path)?;
                let rule: RuleKind = e
                    .baseline_rule
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid("baseline_rule is required with explicit files".into()))?
                    .parse()?;
                let name = hoa_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Benchmark {
                    name,
                    grid: Arc::new(grid),
                    automaton: Arc::new(ldba),
                    rule: BaselineRule::new(rule),
                    episodes: 0,
                    episode_length: 100,
                    agents: 2,
                }
            }
            _ => unreachable!("checked by validate"),
        };
        if let Some(rule) = &e.baseline_rule {
            b.rule.kind = rule.parse()?;
        }
        b.rule.sync_reward = self.baseline.sync_reward;
        b.rule.goal_reward = self.baseline.goal_reward;
        if let Some(n) = e.episodes {
            b.episodes = n;
        }
        if let Some(n) = e.episode_length {
            b.episode_length = n;
        }
        b.agents = e.agents;
        b.validate()?;
        Ok(b)
    }

    pub fn training(&self, b: &Benchmark) -> TrainingSettings {
        TrainingSettings {
            shaping: self.shaping_config(),
            explore: self.schedule.explore.schedule(),
            learning_rate: self.schedule.learning_rate.schedule(),
            episodes: b.episodes,
            episode_length: b.episode_length,
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.experiment.output_dir)
    }
}

pub fn load_automaton(path: &Path) -> Result<Ldba, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    let doc = parse_hoa(&text).map_err(|source| ConfigError::Hoa { path: path.into(), source })?;
    Ldba::load(&doc).map_err(|source| ConfigError::Automaton { path: path.into(), source })
}

pub fn load_grid(path: &Path) -> Result<crate::gridworld::GridSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_grid(&text).map_err(|source| ConfigError::Grid { path: path.into(), source })
}
