//! Benchmarks, baseline reward rules and the training driver.
//!
//! Shaped mode learns over `(cell, automaton state)` with the ε-augmented
//! action set and the automaton-derived reward. Baseline mode runs the same
//! environment with hand-written event rewards, one automaton state and the
//! five environment actions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::automaton::Ldba;
use crate::fixtures;
use crate::gridworld::{parse_grid, AgentState, EnvAction, GridSpec};
use crate::hoa::parse_hoa;
use crate::learner::{select_action, AugState, LearnerError, QTable, Schedule};
use crate::metrics::{build_curves, summarize, LearningCurve, Summary, DEFAULT_WINDOW};
use crate::shaping::{Action, Shaper, ShapingConfig, ShapingError};
use crate::streams;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark '{0}' (expected buttons, buttons-prime, flags or rendezvous)")]
    UnknownBenchmark(String),
    #[error("unknown {what} '{value}'")]
    UnknownName { what: &'static str, value: String },
    #[error("episode length {length} is shorter than the grid diameter {diameter}")]
    EpisodeTooShort { length: usize, diameter: usize },
    #[error(transparent)]
    Shaping(#[from] ShapingError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Shaped,
    Baseline,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Shaped => "shaped",
            Mode::Baseline => "baseline",
        })
    }
}

impl FromStr for Mode {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shaped" => Ok(Mode::Shaped),
            "baseline" => Ok(Mode::Baseline),
            _ => Err(BenchError::UnknownName { what: "mode", value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    /// Sync reward when one agent is on `a` while another is on `b`.
    Buttons,
    /// Reward for the first collection of each flag.
    Flags,
    Rendezvous,
}

impl FromStr for RuleKind {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "buttons" => Ok(RuleKind::Buttons),
            "flags" => Ok(RuleKind::Flags),
            "rendezvous" => Ok(RuleKind::Rendezvous),
            _ => Err(BenchError::UnknownName { what: "baseline rule", value: s.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRule {
    pub kind: RuleKind,
    pub sync_reward: f64,
    pub goal_reward: f64,
}

/// Per-episode memory of which one-off rewards were already paid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BaselineMemo {
    synced: bool,
    flags: [bool; 2],
}

impl BaselineRule {
    pub fn new(kind: RuleKind) -> Self {
        BaselineRule { kind, sync_reward: 2.0, goal_reward: 10.0 }
    }

    /// Per-agent rewards for the transition `before -> after`. Sync and flag
    /// rewards are paid once per episode; the goal reward on first arrival.
    pub fn reward(&self, grid: &GridSpec, before: &[AgentState], after: &[AgentState], memo: &mut BaselineMemo) -> Vec<f64> {
        let on = |s: &AgentState, ap: &str| grid.cell_labels(s.cell).contains(ap);
        let mut r: Vec<f64> = before
            .iter()
            .zip(after)
            .map(|(b, a)| if a.absorbed && !b.absorbed { self.goal_reward } else { 0.0 })
            .collect();
        match self.kind {
            RuleKind::Buttons | RuleKind::Rendezvous => {
                let met = after.iter().enumerate().any(|(i, si)| {
                    on(si, "a") && after.iter().enumerate().any(|(j, sj)| j != i && on(sj, "b"))
                });
                if met && !memo.synced {
                    memo.synced = true;
                    r.iter_mut().for_each(|x| *x += self.sync_reward);
                }
            }
            RuleKind::Flags => {
                for (k, flag) in ["a", "b"].into_iter().enumerate() {
                    if memo.flags[k] {
                        continue;
                    }
                    for (i, s) in after.iter().enumerate() {
                        if on(s, flag) {
                            memo.flags[k] = true;
                            r[i] += self.sync_reward;
                        }
                    }
                }
            }
        }
        r
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["buttons", "buttons-prime", "flags", "rendezvous"];

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: String,
    pub grid: Arc<GridSpec>,
    pub automaton: Arc<Ldba>,
    pub rule: BaselineRule,
    pub episodes: usize,
    pub episode_length: usize,
    pub agents: usize,
}

impl Benchmark {
    /// `buttons` uses the single-accepting-edge automaton, `buttons-prime`
    /// the one with intermediate accepting edges.
    pub fn builtin(name: &str) -> Result<Benchmark, BenchError> {
        let (hoa, grid, kind, episodes) = match name {
            "buttons" => (fixtures::BUTTONS_PHI3_HOA, fixtures::BUTTONS_GRID, RuleKind::Buttons, 100_000),
            "buttons-prime" => (fixtures::BUTTONS_PHI3_PRIME_HOA, fixtures::BUTTONS_GRID, RuleKind::Buttons, 100_000),
            "flags" => (fixtures::FLAGS_HOA, fixtures::FLAGS_GRID, RuleKind::Flags, 150_000),
            "rendezvous" => (fixtures::RENDEZVOUS_HOA, fixtures::RENDEZVOUS_GRID, RuleKind::Rendezvous, 150_000),
            _ => return Err(BenchError::UnknownBenchmark(name.into())),
        };
        let doc = parse_hoa(hoa).expect("embedded automaton parses");
        Ok(Benchmark {
            name: name.into(),
            grid: Arc::new(parse_grid(grid).expect("embedded grid parses")),
            automaton: Arc::new(Ldba::load(&doc).expect("embedded automaton loads")),
            rule: BaselineRule::new(kind),
            episodes,
            episode_length: 100,
            agents: 2,
        })
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let diameter = self.grid.width() + self.grid.height() - 2;
        if self.episode_length < diameter {
            return Err(BenchError::EpisodeTooShort { length: self.episode_length, diameter });
        }
        self.shaper(ShapingConfig::default())?;
        Ok(())
    }

    pub fn shaper(&self, cfg: ShapingConfig) -> Result<Shaper, ShapingError> {
        Shaper::new(self.automaton.clone(), self.grid.clone(), self.agents, cfg)
    }
}

/// Hyperparameters of one training run. Schedule `steps` are replaced by the
/// episode count: both schedules decay once per episode over the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSettings {
    pub shaping: ShapingConfig,
    pub explore: Schedule,
    pub learning_rate: Schedule,
    pub episodes: usize,
    pub episode_length: usize,
}

impl TrainingSettings {
    pub fn for_benchmark(b: &Benchmark) -> Self {
        TrainingSettings {
            shaping: ShapingConfig::default(),
            explore: Schedule::linear(1.0, 0.01, b.episodes),
            learning_rate: Schedule::linear(1.0, 0.001, b.episodes),
            episodes: b.episodes,
            episode_length: b.episode_length,
        }
    }

    fn schedules(&self) -> (Schedule, Schedule) {
        (
            Schedule { steps: self.episodes, ..self.explore },
            Schedule { steps: self.episodes, ..self.learning_rate },
        )
    }
}

/// Output of one seed: per-agent undiscounted returns and final Q-tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub returns: Vec<Vec<f64>>,
    pub tables: Vec<QTable>,
}

pub fn run_seed(b: &Benchmark, mode: Mode, settings: &TrainingSettings, seed: u64) -> Result<SeedRun, BenchError> {
    match mode {
        Mode::Shaped => run_shaped(b, settings, seed),
        Mode::Baseline => run_baseline(b, settings, seed),
    }
}

fn run_shaped(b: &Benchmark, settings: &TrainingSettings, seed: u64) -> Result<SeedRun, BenchError> {
    let shaper = b.shaper(settings.shaping)?;
    let n = b.agents;
    let grid = &b.grid;
    let (explore, lr) = settings.schedules();
    let mut env = streams::env_streams(seed, n);
    let mut policy: Vec<_> = (0..n).map(|i| streams::policy_stream(seed, i)).collect();
    let mut tables = vec![QTable::new(grid.cell_count(), b.automaton.state_count(), shaper.action_count()); n];
    let mut returns = vec![Vec::with_capacity(settings.episodes); n];

    let mut legal: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut next_legal: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut actions = vec![Action::Env(EnvAction::Stay); n];
    for ep in 0..settings.episodes {
        let (eps, alpha) = (explore.value(ep), lr.value(ep));
        let mut state = shaper.reset();
        let mut ret = vec![0.0; n];
        for (i, l) in legal.iter_mut().enumerate() {
            shaper.augmented_actions_into(&state, i, l);
        }
        for t in 0..settings.episode_length {
            let aug: Vec<AugState> = state
                .agents
                .iter()
                .map(|a| AugState { cell: grid.index(a.cell), q: state.q.0 })
                .collect();
            for i in 0..n {
                actions[i] = select_action(&tables[i], aug[i], &legal[i], eps, &mut policy[i])?;
            }
            let out = shaper.joint_step(&state, &actions, &mut env)?;
            let terminal = out.trapped || t + 1 == settings.episode_length;
            for i in 0..n {
                ret[i] += out.reward;
                shaper.augmented_actions_into(&out.state, i, &mut next_legal[i]);
                let next = (!terminal).then(|| {
                    (AugState { cell: grid.index(out.state.agents[i].cell), q: out.state.q.0 }, next_legal[i].as_slice())
                });
                tables[i].update(aug[i], actions[i], out.reward, out.discount, next, alpha);
            }
            std::mem::swap(&mut legal, &mut next_legal);
            state = out.state;
            if out.trapped {
                break;
            }
        }
        for i in 0..n {
            returns[i].push(ret[i]);
        }
    }
    Ok(SeedRun { seed, returns, tables })
}

fn run_baseline(b: &Benchmark, settings: &TrainingSettings, seed: u64) -> Result<SeedRun, BenchError> {
    let n = b.agents;
    let grid = &b.grid;
    let gamma = settings.shaping.gamma;
    let (explore, lr) = settings.schedules();
    let mut env = streams::env_streams(seed, n);
    let mut policy: Vec<_> = (0..n).map(|i| streams::policy_stream(seed, i)).collect();
    let mut tables = vec![QTable::new(grid.cell_count(), 1, EnvAction::ALL.len()); n];
    let mut returns = vec![Vec::with_capacity(settings.episodes); n];

    let free: Vec<Action> = EnvAction::ALL.map(Action::Env).to_vec();
    let stuck = [Action::Env(EnvAction::Stay)];
    let legal_of = |s: &AgentState| if s.absorbed { &stuck[..] } else { &free[..] };
    let aug = |s: &AgentState| AugState { cell: grid.index(s.cell), q: 0 };

    for ep in 0..settings.episodes {
        let (eps, alpha) = (explore.value(ep), lr.value(ep));
        let mut states: Vec<AgentState> = (0..n).map(|i| grid.initial_state(i)).collect();
        let mut memo = BaselineMemo::default();
        let mut ret = vec![0.0; n];
        for t in 0..settings.episode_length {
            let mut actions = Vec::with_capacity(n);
            for i in 0..n {
                actions.push(select_action(&tables[i], aug(&states[i]), legal_of(&states[i]), eps, &mut policy[i])?);
            }
            let next: Vec<AgentState> = (0..n)
                .map(|i| match actions[i] {
                    Action::Env(a) => grid.env_step(states[i], a, &mut env[i]),
                    Action::Epsilon(_) => unreachable!("baseline has no ε-actions"),
                })
                .collect();
            let rewards = b.rule.reward(grid, &states, &next, &mut memo);
            let done = next.iter().all(|s| s.absorbed);
            let terminal = done || t + 1 == settings.episode_length;
            for i in 0..n {
                ret[i] += rewards[i];
                let nxt = (!terminal).then(|| (aug(&next[i]), legal_of(&next[i])));
                tables[i].update(aug(&states[i]), actions[i], rewards[i], gamma, nxt, alpha);
            }
            states = next;
            if done {
                break;
            }
        }
        for i in 0..n {
            returns[i].push(ret[i]);
        }
    }
    Ok(SeedRun { seed, returns, tables })
}

/// How seeds are scheduled onto threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel;
        #[cfg(not(feature = "parallel"))]
        return Execution::Sequential;
    }
}

/// Runs every seed; results come back in the order of `seeds`.
pub fn run_seeds(b: &Benchmark, mode: Mode, settings: &TrainingSettings, seeds: &[u64], exec: Execution) -> Result<Vec<SeedRun>, BenchError> {
    match exec {
        Execution::Sequential => seeds.iter().map(|&s| run_seed(b, mode, settings, s)).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => seeds.par_iter().map(|&s| run_seed(b, mode, settings, s)).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub mode: Mode,
    pub curves: Vec<LearningCurve>,
    pub summary: Option<Summary>,
}

pub fn run_experiment(b: &Benchmark, mode: Mode, settings: &TrainingSettings, seeds: &[u64], exec: Execution) -> Result<ExperimentResult, BenchError> {
    let runs = run_seeds(b, mode, settings, seeds, exec)?;
    let curves = build_curves(runs.into_iter().map(|r| (r.seed, r.returns)).collect(), DEFAULT_WINDOW);
    let summary = summarize(&curves, DEFAULT_WINDOW);
    Ok(ExperimentResult { mode, curves, summary })
}
