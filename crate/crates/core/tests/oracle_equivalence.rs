use std::sync::Arc;

use marl_shaping::automaton::Ldba;
use marl_shaping::fixtures;
use marl_shaping::gridworld::parse_grid;
use marl_shaping::hoa::parse_hoa;
use marl_shaping::oracle::{build_product, check_equivalence, OracleError, DEFAULT_STATE_CAP};
use marl_shaping::shaping::{EpsilonOrder, Shaper, ShapingConfig};

const THREE_STATES: &str = "HOA: v1\nStates: 3\nStart: 0\nAP: 4 \"a\" \"b\" \"g1\" \"g2\"\nAcceptance: 1 Inf(0)\n--BODY--\n\
State: 0\n[0] 1\n[!0] 0\n\
State: 1\n[1] 2 {0}\n[!1] 1\n\
State: 2\n[t] 2 {0}\n--END--\n";

fn ldba(text: &str) -> Arc<Ldba> {
    Arc::new(Ldba::load(&parse_hoa(text).unwrap()).unwrap())
}

fn setup(hoa: &str, grid: &str, cfg: ShapingConfig) -> (Shaper, marl_shaping::oracle::ProductMdp) {
    let l = ldba(hoa);
    let g = Arc::new(parse_grid(grid).unwrap());
    let shaper = Shaper::new(l.clone(), g.clone(), 2, cfg).unwrap();
    let product = build_product(&l, &[g.clone(), g], &cfg, DEFAULT_STATE_CAP).unwrap();
    (shaper, product)
}

#[test]
fn product_size_is_cells_to_the_agents_times_states() {
    let (_, p) = setup(THREE_STATES, fixtures::SMALL_RENDEZVOUS_GRID, ShapingConfig::default());
    assert_eq!(p.state_count(), 243);
    assert_eq!(p.automaton_states(), 3);
    assert_eq!(p.accepting_states().len(), 2 * 81);
    assert!(p.trap_states().is_empty());
}

#[test]
fn small_instances_agree_with_the_product() {
    let cases = [
        (fixtures::BUTTONS_PHI3_HOA, fixtures::SMALL_BUTTONS_GRID),
        (fixtures::BUTTONS_PHI3_PRIME_HOA, fixtures::SMALL_BUTTONS_GRID),
        (fixtures::FLAGS_HOA, fixtures::SMALL_FLAGS_GRID),
        (fixtures::RENDEZVOUS_HOA, fixtures::SMALL_RENDEZVOUS_GRID),
        (THREE_STATES, fixtures::SMALL_RENDEZVOUS_GRID),
    ];
    for (hoa, grid) in cases {
        let (shaper, product) = setup(hoa, grid, ShapingConfig::default());
        for seed in 0..3 {
            let report = check_equivalence(&shaper, &product, 3000, 50, seed);
            assert!(report.is_equivalent(), "{report}");
        }
    }
}

#[test]
fn label_first_mutation_is_detected() {
    let cfg = ShapingConfig { epsilon_order: EpsilonOrder::LabelFirst, ..ShapingConfig::default() };
    let l = ldba(fixtures::BUTTONS_PHI3_HOA);
    let g = Arc::new(parse_grid(fixtures::SMALL_BUTTONS_GRID).unwrap());
    let mutated = Shaper::new(l.clone(), g.clone(), 2, cfg).unwrap();
    let product = build_product(&l, &[g.clone(), g], &ShapingConfig::default(), DEFAULT_STATE_CAP).unwrap();
    let report = check_equivalence(&mutated, &product, 10_000, 50, 1);
    assert!(!report.is_equivalent(), "mutation went unnoticed: {report}");
}

#[test]
fn state_cap_is_enforced() {
    let l = ldba(fixtures::RENDEZVOUS_HOA);
    let g = Arc::new(parse_grid(fixtures::RENDEZVOUS_GRID).unwrap());
    let err = build_product(&l, &[g.clone(), g], &ShapingConfig::default(), 10_000).unwrap_err();
    assert!(matches!(err, OracleError::CapExceeded { states: 16807, cap: 10_000 }), "{err}");
}
