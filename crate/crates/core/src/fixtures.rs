//! Shipped automata and grids, embedded so built-in benchmarks need no files.

pub const BUTTONS_PHI3_HOA: &str = include_str!("../fixtures/motivating_phi3.hoa");
pub const BUTTONS_PHI3_PRIME_HOA: &str = include_str!("../fixtures/motivating_phi3prime.hoa");
pub const FLAGS_HOA: &str = include_str!("../fixtures/flags.hoa");
pub const RENDEZVOUS_HOA: &str = include_str!("../fixtures/rendezvous.hoa");

pub const BUTTONS_GRID: &str = include_str!("../fixtures/buttons.grid");
pub const FLAGS_GRID: &str = include_str!("../fixtures/flags.grid");
pub const RENDEZVOUS_GRID: &str = include_str!("../fixtures/rendezvous.grid");

pub const SMALL_BUTTONS_GRID: &str = include_str!("../fixtures/small_buttons.grid");
pub const SMALL_FLAGS_GRID: &str = include_str!("../fixtures/small_flags.grid");
pub const SMALL_RENDEZVOUS_GRID: &str = include_str!("../fixtures/small_rendezvous.grid");

/// `(file name, contents)` of every automaton fixture.
pub const AUTOMATA: [(&str, &str); 4] = [
    ("motivating_phi3.hoa", BUTTONS_PHI3_HOA),
    ("motivating_phi3prime.hoa", BUTTONS_PHI3_PRIME_HOA),
    ("flags.hoa", FLAGS_HOA),
    ("rendezvous.hoa", RENDEZVOUS_HOA),
];

pub const GRIDS: [(&str, &str); 6] = [
    ("buttons.grid", BUTTONS_GRID),
    ("flags.grid", FLAGS_GRID),
    ("rendezvous.grid", RENDEZVOUS_GRID),
    ("small_buttons.grid", SMALL_BUTTONS_GRID),
    ("small_flags.grid", SMALL_FLAGS_GRID),
    ("small_rendezvous.grid", SMALL_RENDEZVOUS_GRID),
];
