//! Automaton-based reward shaping for cooperative multi-agent tabular
//! Q-learning.
//!
//! A limit-deterministic Büchi automaton over the team's atomic propositions
//! is tracked centrally. Each agent learns over its own cell paired with the
//! shared automaton state, and may take the automaton's ε-moves as actions.
//! Rewards come from accepting transitions.

pub mod automaton;
pub mod bench;
pub mod cli;
pub mod config;
pub mod fixtures;
pub mod gridworld;
pub mod hoa;
pub mod learner;
pub mod metrics;
pub mod oracle;
pub mod shaping;
pub mod streams;
