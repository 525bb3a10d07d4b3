//! Tabular Q-learning over the augmented `(cell, automaton state)` space with
//! per-transition discount.

use std::io::{self, BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::shaping::Action;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("no legal actions to choose from")]
    NoLegalActions,
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Learner-side state: a cell index and an automaton state index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AugState {
    pub cell: usize,
    pub q: usize,
}

/// Dense action-value table, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    cells: usize,
    qs: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(cells: usize, qs: usize, actions: usize) -> Self {
        QTable { cells, qs, actions, values: vec![0.0; cells * qs * actions] }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.cells, self.qs, self.actions)
    }

    #[inline]
    fn slot(&self, s: AugState, a: Action) -> usize {
        debug_assert!(s.cell < self.cells && s.q < self.qs && a.index() < self.actions);
        (s.cell * self.qs + s.q) * self.actions + a.index()
    }

    #[inline]
    pub fn get(&self, s: AugState, a: Action) -> f64 {
        self.values[self.slot(s, a)]
    }

    pub fn set(&mut self, s: AugState, a: Action, v: f64) {
        let i = self.slot(s, a);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Highest-valued legal action; ties go to the first in `legal`.
    pub fn greedy(&self, s: AugState, legal: &[Action]) -> Option<Action> {
        let mut best: Option<(Action, f64)> = None;
        for &a in legal {
            let v = self.get(s, a);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((a, v));
            }
        }
        best.map(|(a, _)| a)
    }

    pub fn max_value(&self, s: AugState, legal: &[Action]) -> f64 {
        legal.iter().map(|&a| self.get(s, a)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q(s,a) += α (r + γ_used · max_{a'} Q(s',a') − Q(s,a))`; `next = None`
    /// marks a terminal transition and bootstraps with 0.
    pub fn update(
        &mut self,
        s: AugState,
        a: Action,
        reward: f64,
        discount: f64,
        next: Option<(AugState, &[Action])>,
        alpha: f64,
    ) {
        let bootstrap = match next {
            Some((ns, legal)) if !legal.is_empty() => self.max_value(ns, legal),
            _ => 0.0,
        };
        let i = self.slot(s, a);
        let old = self.values[i];
        self.values[i] = old + alpha * (reward + discount * bootstrap - old);
    }

    /// One `cell q action value` line per nonzero entry.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# qtable {} {} {}", self.cells, self.qs, self.actions)?;
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                let a = i % self.actions;
                let q = (i / self.actions) % self.qs;
                let cell = i / (self.actions * self.qs);
                writeln!(w, "{cell} {q} {a} {v:e}")?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<QTable, LearnerError> {
        let bad = |line: usize, msg: &str| LearnerError::Checkpoint { line, msg: msg.into() };
        let mut table: Option<QTable> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks[0] == "#" {
                if let ["#", "qtable", c, q, a] = toks.as_slice() {
                    let p = |s: &str| s.parse::<usize>().map_err(|_| bad(n, "bad dimension"));
                    table = Some(QTable::new(p(c)?, p(q)?, p(a)?));
                }
                continue;
            }
            let t = table.as_mut().ok_or_else(|| bad(n, "entry before header"))?;
            let [c, q, a, v] = toks.as_slice() else {
                return Err(bad(n, "expected 'cell q action value'"));
            };
            let idx = |s: &str, lim: usize| match s.parse::<usize>() {
                Ok(x) if x < lim => Ok(x),
                _ => Err(bad(n, "index out of range")),
            };
            let (c, q, a) = (idx(c, t.cells)?, idx(q, t.qs)?, idx(a, t.actions)?);
            let v: f64 = v.parse().map_err(|_| bad(n, "bad value"))?;
            if !v.is_finite() {
                return Err(bad(n, "non-finite value"));
            }
            let slot = (c * t.qs + q) * t.actions + a;
            t.values[slot] = v;
        }
        table.ok_or_else(|| bad(0, "missing header"))
    }
}

/// ε-greedy choice. Exactly one uniform is drawn for the explore test, and
/// one more when exploring.
pub fn select_action<R: Rng + ?Sized>(
    table: &QTable,
    s: AugState,
    legal: &[Action],
    explore_prob: f64,
    rng: &mut R,
) -> Result<Action, LearnerError> {
    if legal.is_empty() {
        return Err(LearnerError::NoLegalActions);
    }
    let u: f64 = rng.random();
    if u < explore_prob {
        Ok(legal[rng.random_range(0..legal.len())])
    } else {
        Ok(table.greedy(s, legal).expect("legal is non-empty"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleKind {
    #[default]
    Linear,
    Exponential,
}

/// Decay from `start` to `end` over `steps` steps, then held at `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    pub kind: ScheduleKind,
}

impl Schedule {
    pub fn linear(start: f64, end: f64, steps: usize) -> Self {
        Schedule { start, end, steps, kind: ScheduleKind::Linear }
    }

    pub fn value(&self, step: usize) -> f64 {
        if self.steps == 0 || step >= self.steps {
            return self.end;
        }
        let frac = step as f64 / self.steps as f64;
        match self.kind {
            ScheduleKind::Linear => self.start + (self.end - self.start) * frac,
            ScheduleKind::Exponential => self.start * (self.end / self.start).powf(frac),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::EnvAction;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const S: AugState = AugState { cell: 0, q: 0 };

    fn env(a: EnvAction) -> Action {
        Action::Env(a)
    }

    fn all() -> Vec<Action> {
        EnvAction::ALL.map(Action::Env).to_vec()
    }

    #[test]
    fn greedy_picks_strict_max_and_breaks_ties_low() {
        let mut t = QTable::new(1, 1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_action(&t, S, &all(), 0.0, &mut rng).unwrap(), env(EnvAction::North));
        t.set(S, env(EnvAction::West), 0.5);
        for _ in 0..50 {
            assert_eq!(select_action(&t, S, &all(), 0.0, &mut rng).unwrap(), env(EnvAction::West));
        }
    }

    #[test]
    fn empty_legal_set_is_an_error() {
        let t = QTable::new(1, 1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            select_action(&t, S, &[], 0.5, &mut rng),
            Err(LearnerError::NoLegalActions)
        ));
    }

    #[test]
    fn update_arithmetic() {
        let mut t = QTable::new(1, 1, 5);
        let a = env(EnvAction::Stay);
        t.update(S, a, 0.01, 0.99, Some((S, &all())), 1.0);
        assert!((t.get(S, a) - 0.01).abs() < 1e-15);

        let mut t = QTable::new(1, 1, 5);
        t.update(S, a, 0.0, 0.999, Some((S, &all())), 0.5);
        assert_eq!(t.get(S, a), 0.0);
    }

    #[test]
    fn terminal_bootstraps_zero() {
        let mut t = QTable::new(2, 1, 5);
        let next = AugState { cell: 1, q: 0 };
        t.set(next, env(EnvAction::Stay), 100.0);
        t.update(S, env(EnvAction::North), -1.0, 0.999, None, 1.0);
        assert_eq!(t.get(S, env(EnvAction::North)), -1.0);
    }

    #[test]
    fn schedule_endpoints() {
        let s = Schedule::linear(1.0, 0.01, 1000);
        assert_eq!(s.value(0), 1.0);
        assert_eq!(s.value(1000), 0.01);
        assert_eq!(s.value(5000), 0.01);
        assert!((s.value(500) - 0.505).abs() < 1e-12);
        let e = Schedule { kind: ScheduleKind::Exponential, ..s };
        assert!((e.value(500) - 0.1).abs() < 1e-12);
        assert_eq!(Schedule::linear(1.0, 0.001, 0).value(0), 0.001);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut t = QTable::new(3, 2, 6);
        t.set(AugState { cell: 2, q: 1 }, Action::from_index(5), 0.125);
        t.set(S, env(EnvAction::South), -0.3);
        let mut buf = Vec::new();
        t.write_checkpoint(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(QTable::read_checkpoint(&buf[..]).unwrap(), t);
    }
}
