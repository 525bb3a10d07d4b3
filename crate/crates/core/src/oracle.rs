//! Explicit product MDP `automaton × M_0 × … × M_n` for small instances.
//!
//! This is a second, deliberately separate encoding of the team dynamics:
//! it enumerates every joint state and every legal joint action up front,
//! evaluates guards directly instead of using the automaton's lookup table,
//! and carries its own copy of the reward rule. [`check_equivalence`] drives
//! it side by side with [`crate::shaping::Shaper`] under coupled randomness.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::automaton::{Ldba, StateId};
use crate::gridworld::{Cell, EnvAction, GridError, GridSpec};
use crate::hoa::LabelSet;
use crate::shaping::{Action, JointShapingState, Shaper, ShapingConfig, ShapingError};
use crate::streams;

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("product has {states} states, above the cap of {cap}")]
    CapExceeded { states: usize, cap: usize },
    #[error("action {action:?} is not legal in product state {state}")]
    IllegalAction { state: usize, action: Vec<Action> },
    #[error("expected {expected} random streams, got {got}")]
    StreamCount { expected: usize, got: usize },
    #[error("label '{0}' is not in the automaton alphabet")]
    Alphabet(String),
    #[error("no agents")]
    NoAgents,
    #[error(transparent)]
    Shaping(#[from] ShapingError),
}

impl From<GridError> for OracleError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::UnknownLabel(l) => OracleError::Alphabet(l),
            other => OracleError::Shaping(ShapingError::Alphabet(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductOutcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub discount: f64,
    pub accepting: bool,
    pub trapped: bool,
}

/// One enabled joint action and its enumerated distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTransition {
    pub action: Vec<Action>,
    /// Per agent: `Some(outcomes)` when the agent moves (and so consumes one
    /// uniform), as `(probability, cell index)` pairs; `None` when it stays.
    pub movers: Vec<Option<Vec<(f64, usize)>>>,
    /// Joint outcomes in mixed-radix order over the movers' outcome lists
    /// (agent 0 varies fastest).
    pub outcomes: Vec<ProductOutcome>,
}

#[derive(Debug, Clone)]
pub struct ProductMdp {
    grids: Vec<Arc<GridSpec>>,
    strides: Vec<usize>,
    cells_total: usize,
    q_count: usize,
    initial: usize,
    trap: Option<usize>,
    q_accepting: Vec<bool>,
    transitions: Vec<Vec<ProductTransition>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState {
    pub cells: Vec<Cell>,
    pub q: StateId,
}

fn enabled_edge_target(ldba: &Ldba, q: usize, labels: LabelSet) -> (usize, bool) {
    let mut hits = ldba.states()[q].edges.iter().filter(|e| e.guard.eval(labels));
    let e = hits.next().expect("loaded automata are complete");
    debug_assert!(hits.next().is_none());
    (e.target.0, e.accepting)
}

/// Builds the explicit product of `ldba` with one grid per agent. Agent `i`
/// starts at `grids[i].starts()[i]`.
pub fn build_product(ldba: &Ldba, grids: &[Arc<GridSpec>], cfg: &ShapingConfig, cap: usize) -> Result<ProductMdp, OracleError> {
    if grids.is_empty() {
        return Err(OracleError::NoAgents);
    }
    let mut strides = Vec::with_capacity(grids.len());
    let mut cells_total: usize = 1;
    for g in grids {
        strides.push(cells_total);
        cells_total = cells_total.saturating_mul(g.cell_count());
    }
    let q_count = ldba.state_count();
    let states = cells_total.saturating_mul(q_count);
    if states > cap {
        return Err(OracleError::CapExceeded { states, cap });
    }

    let masks: Vec<Vec<LabelSet>> = grids
        .iter()
        .map(|g| g.label_masks(ldba.aps()))
        .collect::<Result<_, _>>()?;
    let trap = ldba
        .states()
        .iter()
        .enumerate()
        .find(|(i, s)| {
            s.epsilons.is_empty()
                && s.edges.iter().all(|e| e.target.0 == *i && !e.accepting)
        })
        .map(|(i, _)| i);

    let n = grids.len();
    let mut transitions = Vec::with_capacity(states);
    for idx in 0..states {
        let q = idx / cells_total;
        let mut rem = idx % cells_total;
        let mut cells = vec![0usize; n];
        for i in (0..n).rev() {
            cells[i] = rem / strides[i];
            rem %= strides[i];
        }

        let eps_here: Vec<Action> = ldba.states()[q].epsilons.iter().map(|m| Action::Epsilon(m.id)).collect();
        let per_agent: Vec<Vec<Action>> = (0..n)
            .map(|i| {
                let g = &grids[i];
                let mut acts: Vec<Action> = if g.is_goal(g.cell_at(cells[i])) {
                    vec![Action::Env(EnvAction::Stay)]
                } else {
                    EnvAction::ALL.iter().map(|&a| Action::Env(a)).collect()
                };
                acts.extend(eps_here.iter().copied());
                acts
            })
            .collect();

        let mut row = Vec::new();
        let mut choice = vec![0usize; n];
        'joint: loop {
            let action: Vec<Action> = (0..n).map(|i| per_agent[i][choice[i]]).collect();
            row.push(product_transition(ldba, grids, &masks, &strides, cells_total, trap, cfg, q, &cells, action));
            for i in 0..n {
                choice[i] += 1;
                if choice[i] < per_agent[i].len() {
                    continue 'joint;
                }
                choice[i] = 0;
            }
            break;
        }
        transitions.push(row);
    }

    let initial_cells: usize = (0..n)
        .map(|i| grids[i].index(grids[i].starts()[i]) * strides[i])
        .sum();
    Ok(ProductMdp {
        grids: grids.to_vec(),
        strides,
        cells_total,
        q_count,
        initial: ldba.initial().0 * cells_total + initial_cells,
        trap,
        q_accepting: ldba
            .states()
            .iter()
            .map(|st| st.edges.iter().any(|e| e.accepting) || st.epsilons.iter().any(|m| m.accepting))
            .collect(),
        transitions,
    })
}

#[allow(clippy::too_many_arguments)]
fn product_transition(
    ldba: &Ldba,
    grids: &[Arc<GridSpec>],
    masks: &[Vec<LabelSet>],
    strides: &[usize],
    cells_total: usize,
    trap: Option<usize>,
    cfg: &ShapingConfig,
    q: usize,
    cells: &[usize],
    action: Vec<Action>,
) -> ProductTransition {
    let n = grids.len();
    // Lowest-indexed ε choice is the one applied; every ε chooser stays.
    let applied_eps = action.iter().find_map(|a| match a {
        Action::Epsilon(e) => Some(*e),
        _ => None,
    });

    let movers: Vec<Option<Vec<(f64, usize)>>> = (0..n)
        .map(|i| {
            let g = &grids[i];
            let here = g.cell_at(cells[i]);
            match action[i] {
                Action::Env(cmd) if !g.is_goal(here) => {
                    let p = g.slip();
                    let alts: Vec<EnvAction> = match cmd {
                        EnvAction::Stay => EnvAction::MOVES.to_vec(),
                        c => EnvAction::MOVES.iter().copied().filter(|&m| m != c).collect(),
                    };
                    let mut dist = vec![(p, g.index(g.neighbor(here, cmd)))];
                    let share = (1.0 - p) / alts.len() as f64;
                    dist.extend(alts.iter().map(|&m| (share, g.index(g.neighbor(here, m)))));
                    dist.retain(|(pr, _)| *pr > 0.0);
                    Some(dist)
                }
                _ => None,
            }
        })
        .collect();

    let radix: Vec<usize> = movers.iter().map(|m| m.as_ref().map_or(1, Vec::len)).collect();
    let total: usize = radix.iter().product();
    let mut outcomes = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut prob = 1.0;
        let mut next_cells = vec![0usize; n];
        for i in 0..n {
            let digit = k % radix[i];
            k /= radix[i];
            match &movers[i] {
                Some(d) => {
                    prob *= d[digit].0;
                    next_cells[i] = d[digit].1;
                }
                None => next_cells[i] = cells[i],
            }
        }
        let labels = (0..n).fold(LabelSet::EMPTY, |acc, i| acc.union(masks[i][next_cells[i]]));

        let mut accepting = false;
        let mut nq = q;
        if let Some(e) = applied_eps {
            let mv = ldba.states()[q]
                .epsilons
                .iter()
                .find(|m| m.id == e)
                .expect("ε-action enumerated from this state");
            accepting |= mv.accepting;
            nq = mv.target.0;
        }
        let (tq, acc) = enabled_edge_target(ldba, nq, labels);
        accepting |= acc;
        nq = tq;

        let trapped = trap == Some(nq);
        let accepting = accepting && !trapped;
        let (reward, discount) = match (trapped, accepting) {
            (true, _) => (cfg.trap_reward, cfg.gamma),
            (false, true) => (1.0 - cfg.gamma_b, cfg.gamma_b),
            (false, false) => (0.0, cfg.gamma),
        };
        let next = nq * cells_total + next_cells.iter().zip(strides).map(|(c, s)| c * s).sum::<usize>();
        outcomes.push(ProductOutcome { prob, next, reward, discount, accepting, trapped });
    }
    ProductTransition { action, movers, outcomes }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductStep {
    pub state: usize,
    pub reward: f64,
    pub discount: f64,
    pub accepting: bool,
    pub trapped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductTrace {
    pub initial: usize,
    pub steps: Vec<ProductStep>,
}

impl ProductMdp {
    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn agents(&self) -> usize {
        self.grids.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn decode(&self, state: usize) -> ProductState {
        let q = state / self.cells_total;
        let mut rem = state % self.cells_total;
        let mut cells = vec![Cell::new(0, 0); self.grids.len()];
        for i in (0..self.grids.len()).rev() {
            cells[i] = self.grids[i].cell_at(rem / self.strides[i]);
            rem %= self.strides[i];
        }
        ProductState { cells, q: StateId(q) }
    }

    pub fn encode(&self, s: &ProductState) -> usize {
        s.q.0 * self.cells_total
            + s.cells
                .iter()
                .zip(&self.grids)
                .zip(&self.strides)
                .map(|((c, g), st)| g.index(*c) * st)
                .sum::<usize>()
    }

    pub fn transitions(&self, state: usize) -> &[ProductTransition] {
        &self.transitions[state]
    }

    pub fn is_trap(&self, state: usize) -> bool {
        self.trap == Some(state / self.cells_total)
    }

    /// States whose automaton component has an accepting outgoing edge.
    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.state_count())
            .filter(|&s| self.q_accepting[s / self.cells_total])
            .collect()
    }

    pub fn trap_states(&self) -> Vec<usize> {
        (0..self.state_count()).filter(|&s| self.is_trap(s)).collect()
    }

    pub fn automaton_states(&self) -> usize {
        self.q_count
    }

    /// Samples one transition; agent `i`'s move consumes one uniform from `rngs[i]`.
    pub fn step<R: Rng>(&self, state: usize, action: &[Action], rngs: &mut [R]) -> Result<ProductStep, OracleError> {
        if rngs.len() != self.grids.len() {
            return Err(OracleError::StreamCount { expected: self.grids.len(), got: rngs.len() });
        }
        let tr = self.transitions[state]
            .iter()
            .find(|t| t.action == action)
            .ok_or_else(|| OracleError::IllegalAction { state, action: action.to_vec() })?;
        let mut index = 0;
        let mut scale = 1;
        for (i, m) in tr.movers.iter().enumerate() {
            if let Some(dist) = m {
                let u: f64 = rngs[i].random();
                let mut acc = 0.0;
                let mut pick = dist.len() - 1;
                for (k, (p, _)) in dist.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                index += pick * scale;
                scale *= dist.len();
            }
        }
        let o = tr.outcomes[index];
        Ok(ProductStep {
            state: o.next,
            reward: o.reward,
            discount: o.discount,
            accepting: o.accepting,
            trapped: o.trapped,
        })
    }
}

/// Runs a fixed joint-action sequence from the initial state.
pub fn simulate_product<R: Rng>(m: &ProductMdp, actions: &[Vec<Action>], rngs: &mut [R]) -> Result<ProductTrace, OracleError> {
    let mut state = m.initial;
    let mut steps = Vec::with_capacity(actions.len());
    for a in actions {
        let s = m.step(state, a, rngs)?;
        state = s.state;
        steps.push(s);
    }
    Ok(ProductTrace { initial: m.initial, steps })
}

/// Observable tuple compared between the two systems at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTuple {
    pub cells: Vec<Cell>,
    pub q: StateId,
    pub reward: f64,
    pub discount: f64,
    pub accepting: bool,
    pub trapped: bool,
}

impl fmt::Display for StepTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.cells.iter().map(|c| format!("({c})")).collect();
        write!(
            f,
            "cells=[{}] q={} reward={} discount={} accepting={} trapped={}",
            cells.join(" "),
            self.q,
            self.reward,
            self.discount,
            self.accepting,
            self.trapped
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub step: usize,
    pub actions: Vec<Action>,
    pub shaping: Result<StepTuple, String>,
    pub product: Result<StepTuple, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub seed: u64,
    pub steps: usize,
    pub episodes: usize,
    pub divergence: Option<Divergence>,
}

impl EquivalenceReport {
    pub fn is_equivalent(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => write!(
                f,
                "seed {}: {} steps over {} episodes, no divergence",
                self.seed, self.steps, self.episodes
            ),
            Some(d) => {
                let show = |r: &Result<StepTuple, String>| match r {
                    Ok(t) => t.to_string(),
                    Err(e) => format!("error: {e}"),
                };
                let acts: Vec<String> = d.actions.iter().map(|a| a.to_string()).collect();
                writeln!(f, "seed {}: divergence at step {}", self.seed, d.step)?;
                writeln!(f, "  actions: [{}]", acts.join(", "))?;
                writeln!(f, "  shaping: {}", show(&d.shaping))?;
                write!(f, "  product: {}", show(&d.product))
            }
        }
    }
}

/// Drives `shaper` and the explicit product with identical action choices and
/// identically seeded per-agent streams for `n_steps` steps, resetting both on
/// trap entry and every `episode_len` steps.
pub fn check_equivalence(shaper: &Shaper, product: &ProductMdp, n_steps: usize, episode_len: usize, seed: u64) -> EquivalenceReport {
    let n = shaper.agents();
    let mut driver = streams::driver_stream(seed);
    let mut shaping_rngs = streams::env_streams(seed, n);
    let mut product_rngs = streams::env_streams(seed, n);

    let mut js: JointShapingState = shaper.reset();
    let mut ps = product.initial();
    let mut episodes = 1;
    let mut legal = Vec::new();
    let episode_len = episode_len.max(1);

    for step in 0..n_steps {
        let actions: Vec<Action> = (0..n)
            .map(|i| {
                shaper.augmented_actions_into(&js, i, &mut legal);
                let eps: Vec<Action> = legal.iter().copied().filter(|a| a.is_epsilon()).collect();
                if !eps.is_empty() && driver.random_bool(0.25) {
                    eps[driver.random_range(0..eps.len())]
                } else {
                    legal[driver.random_range(0..legal.len())]
                }
            })
            .collect();

        let s_out = shaper.joint_step(&js, &actions, &mut shaping_rngs);
        let p_out = product.step(ps, &actions, &mut product_rngs);

        let s_tuple = s_out.as_ref().map_err(|e| e.to_string()).map(|o| StepTuple {
            cells: o.state.agents.iter().map(|a| a.cell).collect(),
            q: o.state.q,
            reward: o.reward,
            discount: o.discount,
            accepting: o.accepting,
            trapped: o.trapped,
        });
        let p_tuple = p_out.as_ref().map_err(|e| e.to_string()).map(|o| {
            let d = product.decode(o.state);
            StepTuple {
                cells: d.cells,
                q: d.q,
                reward: o.reward,
                discount: o.discount,
                accepting: o.accepting,
                trapped: o.trapped,
            }
        });

        match (&s_tuple, &p_tuple) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => {
                return EquivalenceReport {
                    seed,
                    steps: step,
                    episodes,
                    divergence: Some(Divergence { step, actions, shaping: s_tuple, product: p_tuple }),
                }
            }
        }

        let s_out = s_out.unwrap();
        let p_out = p_out.unwrap();
        if s_out.trapped || (step + 1) % episode_len == 0 {
            js = shaper.reset();
            ps = product.initial();
            episodes += 1;
        } else {
            js = s_out.state;
            ps = p_out.state;
        }
    }
    EquivalenceReport { seed, steps: n_steps, episodes, divergence: None }
}
