//! Step-level properties of the shaping runtime, checked against a reading of
//! the raw HOA document rather than the loaded automaton's lookup table.

mod common;

use std::sync::Arc;

use marl_shaping::automaton::{Ldba, StateId};
use marl_shaping::fixtures;
use marl_shaping::gridworld::parse_grid;
use marl_shaping::hoa::parse_hoa;
use marl_shaping::shaping::{Action, Shaper, ShapingConfig};
use marl_shaping::streams;
use proptest::prelude::*;

#[test]
fn rewards_follow_accepting_transitions() {
    for (name, hoa, grid) in common::pairings() {
        common::fuzz(name, hoa, grid, 20_000, 3);
    }
}

#[test]
fn terminated_state_rejects_steps() {
    let ldba = Arc::new(Ldba::load(&parse_hoa(fixtures::BUTTONS_PHI3_HOA).unwrap()).unwrap());
    let grid = Arc::new(parse_grid(fixtures::SMALL_BUTTONS_GRID).unwrap());
    let shaper = Shaper::new(ldba, grid, 2, ShapingConfig::default()).unwrap();
    let mut s = shaper.reset();
    s.terminated = true;
    let mut rngs = streams::env_streams(0, 2);
    assert!(shaper.joint_step(&s, &[Action::from_index(4), Action::from_index(4)], &mut rngs).is_err());
}

const SWAP_A: &str = "[grid]\nslip = 0.8\n[legend]\na = a\nb = b\nG = g1\nH = g2\n[layout]\n....\n.a..\n..b.\nG..H\n[starts]\n0,0\n3,0\n";
const SWAP_B: &str = "[grid]\nslip = 0.8\n[legend]\na = a\nb = b\nG = g1\nH = g2\n[layout]\n....\n.a..\n..b.\nG..H\n[starts]\n3,0\n0,0\n";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Relabeling the agents (starts, actions and random streams together)
    /// does not change the automaton run or the rewards.
    #[test]
    fn agent_order_does_not_matter(seed in any::<u64>(), acts in prop::collection::vec((0usize..5, 0usize..5), 1..120)) {
        let ldba = Arc::new(Ldba::load(&parse_hoa(fixtures::RENDEZVOUS_HOA).unwrap()).unwrap());
        let s1 = Shaper::new(ldba.clone(), Arc::new(parse_grid(SWAP_A).unwrap()), 2, ShapingConfig::default()).unwrap();
        let s2 = Shaper::new(ldba, Arc::new(parse_grid(SWAP_B).unwrap()), 2, ShapingConfig::default()).unwrap();
        let mut r1 = vec![streams::env_stream(seed, 0), streams::env_stream(seed, 1)];
        let mut r2 = vec![streams::env_stream(seed, 1), streams::env_stream(seed, 0)];
        let (mut a, mut b) = (s1.reset(), s2.reset());
        for (x, y) in acts {
            let o1 = s1.joint_step(&a, &[Action::from_index(x), Action::from_index(y)], &mut r1).unwrap();
            let o2 = s2.joint_step(&b, &[Action::from_index(y), Action::from_index(x)], &mut r2).unwrap();
            prop_assert_eq!(o1.state.q, o2.state.q);
            prop_assert_eq!(o1.reward, o2.reward);
            prop_assert_eq!(o1.state.agents[0], o2.state.agents[1]);
            prop_assert_eq!(o1.state.agents[1], o2.state.agents[0]);
            if o1.trapped {
                break;
            }
            a = o1.state;
            b = o2.state;
        }
    }

    #[test]
    fn epsilon_choosers_do_not_move(seed in any::<u64>()) {
        let ldba = Arc::new(Ldba::load(&parse_hoa(fixtures::BUTTONS_PHI3_HOA).unwrap()).unwrap());
        let grid = Arc::new(parse_grid(fixtures::SMALL_BUTTONS_GRID).unwrap());
        let shaper = Shaper::new(ldba, grid, 2, ShapingConfig::default()).unwrap();
        let mut s = shaper.reset();
        s.q = StateId(1);
        let mut rngs = streams::env_streams(seed, 2);
        let eps = shaper.augmented_actions(&s, 0).into_iter().find(|a| a.is_epsilon()).unwrap();
        let out = shaper.joint_step(&s, &[eps, Action::from_index(1)], &mut rngs).unwrap();
        prop_assert_eq!(out.state.agents[0], s.agents[0]);
    }
}
