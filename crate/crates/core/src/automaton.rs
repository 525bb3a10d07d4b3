//! Runtime semantics of a limit-deterministic Büchi automaton with
//! transition-based acceptance and ε-moves.

use std::fmt;

use thiserror::Error;

use crate::hoa::{Guard, HoaDocument, LabelSet, EPSILON_AP};

/// Label enumeration at load time is exhaustive; keep it bounded.
pub const MAX_LOAD_APS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub usize);

/// Globally unique identifier of an ε-move, numbered in body order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EpsId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

impl fmt::Display for EpsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "eps{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("state {state}: labels {labels:?} enable more than one edge")]
    NotDeterministic { state: usize, labels: Vec<String> },
    #[error("state {state}: guard mixes the ε marker with ordinary propositions")]
    MixedEpsilonGuard { state: usize },
    #[error("state {state}: guard references unknown AP {ap}")]
    UnknownAp { state: usize, ap: usize },
    #[error("alphabet of {0} propositions is too large to enumerate")]
    AlphabetTooLarge(usize),
    #[error("ε-action {eps} is not available in state {state}")]
    EpsilonUnavailable { state: StateId, eps: EpsId },
    #[error("invalid automaton document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledEdge {
    pub guard: Guard,
    pub target: StateId,
    pub accepting: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpsilonMove {
    pub id: EpsId,
    pub target: StateId,
    pub accepting: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LdbaState {
    pub name: Option<String>,
    pub edges: Vec<LabeledEdge>,
    pub epsilons: Vec<EpsilonMove>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AutomatonStepResult {
    pub next: StateId,
    pub accepting: bool,
    pub trapped: bool,
}

/// An automaton ready for stepping.
///
/// After [`Ldba::load`] every state has exactly one enabled labeled edge for
/// every label set; incomplete states are routed to a trap state.
#[derive(Debug, Clone)]
pub struct Ldba {
    name: Option<String>,
    aps: Vec<String>,
    initial: StateId,
    states: Vec<LdbaState>,
    trap: Option<StateId>,
    /// `(target, accepting)` for `state * 2^|aps| + labels`.
    table: Vec<(u32, bool)>,
    epsilon_count: usize,
    source_edge_count: usize,
}

impl Ldba {
    pub fn load(doc: &HoaDocument) -> Result<Ldba, AutomatonError> {
        doc.validate()
            .map_err(|e| AutomatonError::Document(e.to_string()))?;

        let eps_ap = doc.aps.iter().position(|a| a == EPSILON_AP);
        let aps: Vec<String> = doc
            .aps
            .iter()
            .filter(|a| a.as_str() != EPSILON_AP)
            .cloned()
            .collect();
        if aps.len() > MAX_LOAD_APS {
            return Err(AutomatonError::AlphabetTooLarge(aps.len()));
        }
        let remap = |i: usize| match eps_ap {
            Some(e) if i > e => i - 1,
            _ => i,
        };

        let mut states = Vec::with_capacity(doc.states.len());
        let mut next_eps = 0;
        for (sid, hs) in doc.states.iter().enumerate() {
            let mut st = LdbaState { name: hs.name.clone(), ..Default::default() };
            for e in &hs.edges {
                let target = StateId(e.target);
                if let Some(eps) = eps_ap {
                    if e.guard == Guard::Ap(eps) {
                        st.epsilons.push(EpsilonMove {
                            id: EpsId(next_eps),
                            target,
                            accepting: e.accepting,
                        });
                        next_eps += 1;
                        continue;
                    }
                    if e.guard.mentions(eps) {
                        return Err(AutomatonError::MixedEpsilonGuard { state: sid });
                    }
                }
                let guard = e.guard.map_aps(&remap);
                if let Some(ap) = guard.max_ap().filter(|&ap| ap >= aps.len()) {
                    return Err(AutomatonError::UnknownAp { state: sid, ap });
                }
                st.edges.push(LabeledEdge { guard, target, accepting: e.accepting });
            }
            states.push(st);
        }
        let source_edge_count = states.iter().map(|s| s.edges.len()).sum();

        let n_labels = 1usize << aps.len();
        let mut table = vec![(u32::MAX, false); states.len() * n_labels];
        let mut incomplete = Vec::new();
        for (sid, st) in states.iter().enumerate() {
            for mask in 0..n_labels {
                let labels = LabelSet(mask as u64);
                let mut enabled = st.edges.iter().filter(|e| e.guard.eval(labels));
                match (enabled.next(), enabled.next()) {
                    (Some(e), None) => {
                        table[sid * n_labels + mask] = (e.target.0 as u32, e.accepting)
                    }
                    (Some(_), Some(_)) => {
                        return Err(AutomatonError::NotDeterministic {
                            state: sid,
                            labels: labels.iter().map(|i| aps[i].clone()).collect(),
                        })
                    }
                    (None, _) => incomplete.push((sid, mask)),
                }
            }
        }

        let is_trap = |sid: usize, table: &[(u32, bool)], states: &[LdbaState]| {
            states[sid].epsilons.is_empty()
                && (0..n_labels).all(|m| table[sid * n_labels + m] == (sid as u32, false))
        };
        let mut trap = (0..states.len())
            .find(|&s| is_trap(s, &table, &states))
            .map(StateId);

        if !incomplete.is_empty() {
            let trap_id = match trap {
                Some(t) => t,
                None => {
                    let t = StateId(states.len());
                    states.push(LdbaState {
                        name: Some("trap".into()),
                        edges: vec![LabeledEdge { guard: Guard::True, target: t, accepting: false }],
                        epsilons: Vec::new(),
                    });
                    table.extend(std::iter::repeat_n((t.0 as u32, false), n_labels));
                    trap = Some(t);
                    t
                }
            };
            let mut by_state: Vec<usize> = incomplete.iter().map(|&(s, _)| s).collect();
            by_state.dedup();
            for sid in by_state {
                let covered: Vec<Guard> = states[sid].edges.iter().map(|e| e.guard.clone()).collect();
                let guard = if covered.is_empty() {
                    Guard::True
                } else {
                    Guard::negate(Guard::Or(covered))
                };
                states[sid].edges.push(LabeledEdge { guard, target: trap_id, accepting: false });
            }
            for (sid, mask) in incomplete {
                table[sid * n_labels + mask] = (trap_id.0 as u32, false);
            }
        }

        Ok(Ldba {
            name: doc.name.clone(),
            aps,
            initial: StateId(doc.start),
            states,
            trap,
            table,
            epsilon_count: next_eps,
            source_edge_count,
        })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Alphabet with the ε marker removed.
    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.aps.iter().position(|a| a == name)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[LdbaState] {
        &self.states
    }

    pub fn state(&self, q: StateId) -> &LdbaState {
        &self.states[q.0]
    }

    pub fn trap(&self) -> Option<StateId> {
        self.trap
    }

    pub fn is_trap(&self, q: StateId) -> bool {
        self.trap == Some(q)
    }

    /// Number of distinct ε-actions across the automaton.
    pub fn epsilon_count(&self) -> usize {
        self.epsilon_count
    }

    /// Accepting transitions, counting labeled edges and ε-moves.
    pub fn accepting_transition_count(&self) -> usize {
        self.states
            .iter()
            .map(|s| {
                s.edges.iter().filter(|e| e.accepting).count()
                    + s.epsilons.iter().filter(|e| e.accepting).count()
            })
            .sum()
    }

    /// Labeled edges present in the source document (excludes trap completion).
    pub fn source_edge_count(&self) -> usize {
        self.source_edge_count
    }

    pub fn step_label(&self, q: StateId, labels: LabelSet) -> AutomatonStepResult {
        let n_labels = 1usize << self.aps.len();
        let mask = (labels.0 as usize) & (n_labels - 1);
        let (target, accepting) = self.table[q.0 * n_labels + mask];
        let next = StateId(target as usize);
        AutomatonStepResult { next, accepting, trapped: self.is_trap(next) }
    }

    pub fn step_epsilon(&self, q: StateId, eps: EpsId) -> Result<AutomatonStepResult, AutomatonError> {
        let mv = self.states[q.0]
            .epsilons
            .iter()
            .find(|m| m.id == eps)
            .ok_or(AutomatonError::EpsilonUnavailable { state: q, eps })?;
        let trapped = self.is_trap(mv.target);
        Ok(AutomatonStepResult {
            next: mv.target,
            accepting: mv.accepting && !trapped,
            trapped,
        })
    }

    pub fn available_epsilons(&self, q: StateId) -> Vec<EpsId> {
        self.states[q.0].epsilons.iter().map(|m| m.id).collect()
    }

    /// State that owns the given ε-action.
    pub fn epsilon_source(&self, eps: EpsId) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.epsilons.iter().any(|m| m.id == eps))
            .map(StateId)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hoa::parse_hoa;

    fn load(text: &str) -> Ldba {
        Ldba::load(&parse_hoa(text).unwrap()).unwrap()
    }

    const MINIMAL: &str = "HOA: v1\nStates: 1\nStart: 0\nAP: 1 \"a\"\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[t] 0 {0}\n--END--\n";

    /// LDBA for "eventually always a, or eventually always b".
    pub(crate) const EVENTUALLY_ALWAYS: &str = "HOA: v1
States: 4
Start: 0
AP: 3 \"a\" \"b\" \"__eps__\"
Acceptance: 1 Inf(0)
--BODY--
State: 0
[t] 0
[2] 1
[2] 2
State: 1
[0] 1 {0}
[!0] 3
State: 2
[1] 2 {0}
[!1] 3
State: 3
[t] 3
--END--
";

    #[test]
    fn minimal_has_no_trap() {
        let a = load(MINIMAL);
        assert_eq!(a.state_count(), 1);
        assert_eq!(a.trap(), None);
        let r = a.step_label(StateId(0), LabelSet::EMPTY);
        assert_eq!(r, AutomatonStepResult { next: StateId(0), accepting: true, trapped: false });
    }

    #[test]
    fn overlapping_guards_rejected() {
        let text = MINIMAL.replace("[t] 0 {0}", "[t] 0 {0}\n[t] 0");
        let err = Ldba::load(&parse_hoa(&text).unwrap()).unwrap_err();
        assert!(matches!(err, AutomatonError::NotDeterministic { state: 0, .. }));
    }

    #[test]
    fn incomplete_state_gets_trap() {
        let a = load(&MINIMAL.replace("[t] 0 {0}", "[0] 0 {0}"));
        assert_eq!(a.state_count(), 2);
        let trap = a.trap().unwrap();
        let r = a.step_label(StateId(0), LabelSet::EMPTY);
        assert_eq!(r, AutomatonStepResult { next: trap, accepting: false, trapped: true });
        let r = a.step_label(trap, LabelSet::from_indices([0]));
        assert_eq!(r, AutomatonStepResult { next: trap, accepting: false, trapped: true });
        assert!(a.available_epsilons(trap).is_empty());
    }

    #[test]
    fn epsilon_moves() {
        let a = load(EVENTUALLY_ALWAYS);
        assert_eq!(a.aps(), ["a", "b"]);
        assert_eq!(a.available_epsilons(StateId(0)), vec![EpsId(0), EpsId(1)]);
        assert_eq!(a.step_epsilon(StateId(0), EpsId(1)).unwrap().next, StateId(2));
        assert_eq!(
            a.step_epsilon(StateId(1), EpsId(0)),
            Err(AutomatonError::EpsilonUnavailable { state: StateId(1), eps: EpsId(0) })
        );
        assert_eq!(a.trap(), Some(StateId(3)));
        assert_eq!(a.accepting_transition_count(), 2);
    }

    #[test]
    fn epsilon_marker_inside_guard_rejected() {
        let text = EVENTUALLY_ALWAYS.replace("[2] 1", "[2&0] 1");
        let err = Ldba::load(&parse_hoa(&text).unwrap()).unwrap_err();
        assert_eq!(err, AutomatonError::MixedEpsilonGuard { state: 0 });
    }

    #[test]
    fn step_label_is_total() {
        let a = load(EVENTUALLY_ALWAYS);
        for q in 0..a.state_count() {
            for mask in 0..4u64 {
                let r = a.step_label(StateId(q), LabelSet(mask));
                let enabled: Vec<_> = a.states()[q]
                    .edges
                    .iter()
                    .filter(|e| e.guard.eval(LabelSet(mask)))
                    .collect();
                assert_eq!(enabled.len(), 1);
                assert_eq!(r.next, enabled[0].target);
                assert!(!(r.trapped && r.accepting));
            }
        }
    }
}
