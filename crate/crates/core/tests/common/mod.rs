//! Reference semantics read straight from the HOA document, independent of
//! the loaded automaton's lookup table.

use std::sync::Arc;

use marl_shaping::automaton::Ldba;
use marl_shaping::fixtures;
use marl_shaping::gridworld::{parse_grid, Cell, GridSpec};
use marl_shaping::hoa::{parse_hoa, Guard, HoaDocument, LabelSet, EPSILON_AP};
use marl_shaping::shaping::{Action, Shaper, ShapingConfig};
use marl_shaping::streams;
use rand::Rng;

pub struct Reference {
    doc: HoaDocument,
    eps_ap: Option<usize>,
    /// `(state, target, accepting)` of every ε-edge, in id order.
    eps: Vec<(usize, usize, bool)>,
}

impl Reference {
    fn new(text: &str) -> Self {
        let doc = parse_hoa(text).unwrap();
        let eps_ap = doc.aps.iter().position(|a| a == EPSILON_AP);
        let mut eps = Vec::new();
        for (s, st) in doc.states.iter().enumerate() {
            for e in &st.edges {
                if Some(&e.guard) == eps_ap.map(Guard::Ap).as_ref() {
                    eps.push((s, e.target, e.accepting));
                }
            }
        }
        Reference { doc, eps_ap, eps }
    }

    fn labels(&self, grid: &GridSpec, cells: &[Cell]) -> LabelSet {
        let mut set = LabelSet::EMPTY;
        for c in cells {
            for name in grid.cell_labels(*c) {
                set.insert(self.doc.aps.iter().position(|a| a == name).unwrap());
            }
        }
        set
    }

    fn is_sink(&self, q: usize) -> bool {
        let edges = &self.doc.states[q].edges;
        !edges.is_empty()
            && edges.iter().all(|e| e.target == q && !e.accepting && Some(&e.guard) != self.eps_ap.map(Guard::Ap).as_ref())
            && edges.iter().any(|e| e.guard == Guard::True)
    }

    /// `(next state or None for an uncovered label, accepting)`.
    fn step(&self, q: usize, eps: Option<usize>, labels: LabelSet) -> (Option<usize>, bool) {
        let mut q = q;
        let mut acc = false;
        if let Some(id) = eps {
            let (src, tgt, a) = self.eps[id];
            assert_eq!(src, q);
            q = tgt;
            acc |= a;
        }
        let hit = self.doc.states[q].edges.iter().find(|e| {
            Some(&e.guard) != self.eps_ap.map(Guard::Ap).as_ref() && e.guard.eval(labels)
        });
        match hit {
            Some(e) => (Some(e.target), acc || e.accepting),
            None => (None, acc),
        }
    }
}

pub fn pairings() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("phi3/buttons", fixtures::BUTTONS_PHI3_HOA, fixtures::BUTTONS_GRID),
        ("phi3'/buttons", fixtures::BUTTONS_PHI3_PRIME_HOA, fixtures::BUTTONS_GRID),
        ("flags", fixtures::FLAGS_HOA, fixtures::FLAGS_GRID),
        ("rendezvous", fixtures::RENDEZVOUS_HOA, fixtures::RENDEZVOUS_GRID),
        ("phi3/small", fixtures::BUTTONS_PHI3_HOA, fixtures::SMALL_BUTTONS_GRID),
        ("flags/small", fixtures::FLAGS_HOA, fixtures::SMALL_FLAGS_GRID),
    ]
}

pub fn fuzz(name: &str, hoa: &str, grid: &str, steps: usize, seed: u64) {
    let reference = Reference::new(hoa);
    let ldba = Arc::new(Ldba::load(&reference.doc).unwrap());
    let grid = Arc::new(parse_grid(grid).unwrap());
    let cfg = ShapingConfig::default();
    let shaper = Shaper::new(ldba.clone(), grid.clone(), 2, cfg).unwrap();
    let mut driver = streams::driver_stream(seed);
    let mut rngs = streams::env_streams(seed, 2);
    let mut state = shaper.reset();
    for step in 0..steps {
        let actions: Vec<Action> = (0..2)
            .map(|i| {
                let legal = shaper.augmented_actions(&state, i);
                legal[driver.random_range(0..legal.len())]
            })
            .collect();
        let out = shaper.joint_step(&state, &actions, &mut rngs).unwrap();
        let eps = actions.iter().find_map(|a| match a {
            Action::Epsilon(e) => Some(e.0),
            _ => None,
        });
        let cells: Vec<_> = out.state.agents.iter().map(|a| a.cell).collect();
        let (next, accepting) = reference.step(state.q.0, eps, reference.labels(&grid, &cells));
        let trapped = next.is_none_or(|q| reference.is_sink(q));
        let ctx = format!("{name} seed {seed} step {step}");

        assert_eq!(out.trapped, trapped, "{ctx}: trap");
        assert_eq!(out.trapped, out.state.terminated, "{ctx}: termination");
        assert_eq!(out.trapped, out.reward == cfg.trap_reward, "{ctx}: trap reward");
        if !trapped {
            assert_eq!(Some(out.state.q.0), next, "{ctx}: next state");
            assert_eq!(out.accepting, accepting, "{ctx}: accepting");
            assert_eq!(out.reward > 0.0, accepting, "{ctx}: positive reward");
            let expect = if accepting { (1.0 - cfg.gamma_b, cfg.gamma_b) } else { (0.0, cfg.gamma) };
            assert_eq!((out.reward, out.discount), expect, "{ctx}: reward/discount");
        } else {
            assert_eq!(out.state.q, ldba.trap().unwrap(), "{ctx}: trap state");
        }

        state = if out.trapped || (step + 1) % 100 == 0 { shaper.reset() } else { out.state };
    }
}
