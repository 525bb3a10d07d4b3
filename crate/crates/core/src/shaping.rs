//! Semi-centralized reward shaping: every agent keeps its own gridworld
//! state while all agents share a single automaton state.
//!
//! One joint time step, in order:
//!
//! 1. split the chosen actions into ε-actions and environment actions;
//! 2. if several agents chose an ε-action, the lowest-indexed agent wins;
//!    every agent that chose an ε-action (applied or discarded) stays put;
//! 3. the remaining agents take an environment step with their own stream;
//! 4. the step's label set is the union of all agents' cell labels;
//! 5. the automaton applies the ε-move first, then the label transition;
//! 6. reward `1 - γ_B` with discount `γ_B` if either automaton move was
//!    accepting, otherwise `0` with discount `γ`; entering the trap yields
//!    the configured trap reward and ends the episode.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::automaton::{AutomatonError, EpsId, Ldba, StateId};
use crate::gridworld::{AgentState, EnvAction, GridError, GridSpec};
use crate::hoa::LabelSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapingError {
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("expected {expected} random streams, got {got}")]
    StreamCount { expected: usize, got: usize },
    #[error("episode already terminated")]
    Terminated,
    #[error("grid labels do not fit the automaton alphabet: {0}")]
    Alphabet(#[from] GridError),
    #[error("grid declares {starts} start cells but {agents} agents were requested")]
    Starts { starts: usize, agents: usize },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// An agent's choice in the augmented action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Env(EnvAction),
    Epsilon(EpsId),
}

impl Action {
    /// Dense index: environment actions first, then ε-actions by id.
    pub fn index(self) -> usize {
        match self {
            Action::Env(a) => a.index(),
            Action::Epsilon(e) => EnvAction::ALL.len() + e.0,
        }
    }

    pub fn from_index(i: usize) -> Action {
        match EnvAction::ALL.get(i) {
            Some(&a) => Action::Env(a),
            None => Action::Epsilon(EpsId(i - EnvAction::ALL.len())),
        }
    }

    pub fn is_epsilon(self) -> bool {
        matches!(self, Action::Epsilon(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Env(a) => write!(f, "{a:?}"),
            Action::Epsilon(e) => write!(f, "{e}"),
        }
    }
}

/// Order of the two automaton sub-steps. Only `EpsilonFirst` is correct;
/// `LabelFirst` exists to check that the product-MDP oracle notices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EpsilonOrder {
    #[default]
    EpsilonFirst,
    LabelFirst,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingConfig {
    pub gamma: f64,
    pub gamma_b: f64,
    pub trap_reward: f64,
    #[doc(hidden)]
    pub epsilon_order: EpsilonOrder,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        ShapingConfig {
            gamma: 0.999,
            gamma_b: 0.99,
            trap_reward: -1.0,
            epsilon_order: EpsilonOrder::EpsilonFirst,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointShapingState {
    pub agents: Vec<AgentState>,
    /// Automaton state shared by every agent.
    pub q: StateId,
    pub terminated: bool,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointStepOutcome {
    pub state: JointShapingState,
    /// Shared by all agents.
    pub reward: f64,
    pub discount: f64,
    pub accepting: bool,
    pub trapped: bool,
    /// Applied ε-action and the agent that chose it.
    pub epsilon: Option<(usize, EpsId)>,
    pub labels: LabelSet,
}

/// The coordinator for one team on one grid with one automaton.
#[derive(Debug, Clone)]
pub struct Shaper {
    ldba: Arc<Ldba>,
    grid: Arc<GridSpec>,
    masks: Vec<LabelSet>,
    agents: usize,
    cfg: ShapingConfig,
}

impl Shaper {
    /// Fails if a grid label is missing from the automaton alphabet or the
    /// grid has fewer start cells than agents.
    pub fn new(
        ldba: Arc<Ldba>,
        grid: Arc<GridSpec>,
        agents: usize,
        cfg: ShapingConfig,
    ) -> Result<Self, ShapingError> {
        let masks = grid.label_masks(ldba.aps())?;
        if grid.starts().len() < agents {
            return Err(ShapingError::Starts { starts: grid.starts().len(), agents });
        }
        Ok(Shaper { ldba, grid, masks, agents, cfg })
    }

    pub fn ldba(&self) -> &Ldba {
        &self.ldba
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn config(&self) -> &ShapingConfig {
        &self.cfg
    }

    /// Number of distinct augmented actions (environment plus ε).
    pub fn action_count(&self) -> usize {
        EnvAction::ALL.len() + self.ldba.epsilon_count()
    }

    pub fn labels_at(&self, s: AgentState) -> LabelSet {
        self.masks[self.grid.index(s.cell)]
    }

    pub fn reset(&self) -> JointShapingState {
        JointShapingState {
            agents: (0..self.agents).map(|i| self.grid.initial_state(i)).collect(),
            q: self.ldba.initial(),
            terminated: false,
            step: 0,
        }
    }

    /// Environment actions (only `Stay` once absorbed) followed by the
    /// ε-actions available at the shared automaton state.
    pub fn augmented_actions(&self, state: &JointShapingState, agent: usize) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.action_count());
        self.augmented_actions_into(state, agent, &mut out);
        out
    }

    pub fn augmented_actions_into(&self, state: &JointShapingState, agent: usize, out: &mut Vec<Action>) {
        out.clear();
        if state.agents[agent].absorbed {
            out.push(Action::Env(EnvAction::Stay));
        } else {
            out.extend(EnvAction::ALL.map(Action::Env));
        }
        out.extend(self.ldba.state(state.q).epsilons.iter().map(|m| Action::Epsilon(m.id)));
    }

    /// Advances the team by one time step. `rngs[i]` is agent `i`'s
    /// environment stream.
    pub fn joint_step<R: Rng>(
        &self,
        state: &JointShapingState,
        actions: &[Action],
        rngs: &mut [R],
    ) -> Result<JointStepOutcome, ShapingError> {
        if state.terminated {
            return Err(ShapingError::Terminated);
        }
        if actions.len() != self.agents {
            return Err(ShapingError::ActionCount { expected: self.agents, got: actions.len() });
        }
        if rngs.len() != self.agents {
            return Err(ShapingError::StreamCount { expected: self.agents, got: rngs.len() });
        }

        let epsilon = actions.iter().enumerate().find_map(|(i, a)| match a {
            Action::Epsilon(e) => Some((i, *e)),
            Action::Env(_) => None,
        });

        let mut agents = state.agents.clone();
        let mut labels = LabelSet::EMPTY;
        for (i, (agent, action)) in agents.iter_mut().zip(actions).enumerate() {
            if let Action::Env(a) = action {
                *agent = self.grid.env_step(*agent, *a, &mut rngs[i]);
            }
            labels = labels.union(self.labels_at(*agent));
        }

        let mut q = state.q;
        let mut accepting = false;
        let mut apply_eps = |q: &mut StateId| -> Result<(), ShapingError> {
            if let Some((_, eps)) = epsilon {
                let r = self.ldba.step_epsilon(*q, eps)?;
                accepting |= r.accepting;
                *q = r.next;
            }
            Ok(())
        };
        match self.cfg.epsilon_order {
            EpsilonOrder::EpsilonFirst => {
                apply_eps(&mut q)?;
                let r = self.ldba.step_label(q, labels);
                accepting |= r.accepting;
                q = r.next;
            }
            EpsilonOrder::LabelFirst => {
                let r = self.ldba.step_label(q, labels);
                let mut next = r.next;
                apply_eps(&mut next)?;
                accepting |= r.accepting;
                q = next;
            }
        }

        let trapped = self.ldba.is_trap(q);
        let accepting = accepting && !trapped;
        let (reward, discount) = if trapped {
            (self.cfg.trap_reward, self.cfg.gamma)
        } else if accepting {
            (1.0 - self.cfg.gamma_b, self.cfg.gamma_b)
        } else {
            (0.0, self.cfg.gamma)
        };

        Ok(JointStepOutcome {
            state: JointShapingState { agents, q, terminated: trapped, step: state.step + 1 },
            reward,
            discount,
            accepting,
            trapped,
            epsilon,
            labels,
        })
    }
}
