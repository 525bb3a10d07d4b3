use marl_shaping::fixtures::GRIDS;
use marl_shaping::gridworld::{parse_grid, serialize_grid, AgentState, Cell, EnvAction, GridSpec};
use marl_shaping::streams;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SAMPLES: usize = 100_000;

fn open_grid(p: f64) -> GridSpec {
    GridSpec::new(5, 5, p).unwrap().with_start(Cell::new(2, 2)).unwrap()
}

fn outcome_counts(grid: &GridSpec, cmd: EnvAction, seed: u64) -> [usize; 5] {
    let mut rng = streams::env_stream(seed, 0);
    let start = AgentState { cell: Cell::new(2, 2), absorbed: false };
    let mut counts = [0usize; 5];
    for _ in 0..SAMPLES {
        let next = grid.env_step(start, cmd, &mut rng);
        let dir = EnvAction::ALL
            .iter()
            .position(|&d| grid.neighbor(start.cell, d) == next.cell)
            .unwrap();
        counts[dir] += 1;
    }
    counts
}

fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    counts
        .iter()
        .zip(probs)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&c, &p)| {
            let e = p * SAMPLES as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn commanded_direction_frequency() {
    let counts = outcome_counts(&open_grid(0.8), EnvAction::North, 11);
    let frac = counts[EnvAction::North.index()] as f64 / SAMPLES as f64;
    assert!((frac - 0.8).abs() <= 0.01, "north fraction {frac}");
}

#[test]
fn slip_distribution_passes_chi_square() {
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    let grid = open_grid(0.8);
    for (k, cmd) in EnvAction::MOVES.into_iter().enumerate() {
        let counts = outcome_counts(&grid, cmd, 100 + k as u64);
        let probs: Vec<f64> = EnvAction::ALL
            .iter()
            .map(|&d| match d {
                EnvAction::Stay => 0.0,
                d if d == cmd => 0.8,
                _ => 0.2 / 3.0,
            })
            .collect();
        assert_eq!(counts[EnvAction::Stay.index()], 0);
        let stat = chi_square(&counts, &probs);
        assert!(stat < critical, "{cmd:?}: chi-square {stat} >= {critical}");
    }
}

#[test]
fn stay_command_slips_uniformly() {
    let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
    let counts = outcome_counts(&open_grid(0.8), EnvAction::Stay, 7);
    let probs = [0.05, 0.05, 0.05, 0.05, 0.8];
    let stat = chi_square(&counts, &probs);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn deterministic_stay() {
    let grid = open_grid(1.0);
    let mut rng = streams::env_stream(0, 0);
    let s = AgentState { cell: Cell::new(2, 2), absorbed: false };
    for _ in 0..1000 {
        assert_eq!(grid.env_step(s, EnvAction::Stay, &mut rng), s);
    }
}

#[test]
fn shipped_grids_round_trip() {
    for (name, text) in GRIDS {
        let g = parse_grid(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = parse_grid(&serialize_grid(&g)).unwrap();
        assert_eq!(serialize_grid(&g), serialize_grid(&again), "{name}");
        assert!(g.starts().len() >= 2, "{name}");
    }
}

proptest! {
    #[test]
    fn absorption_is_permanent(seed in any::<u64>(), actions in prop::collection::vec(0usize..5, 1..200)) {
        let grid = parse_grid(GRIDS[0].1).unwrap();
        let mut rng = streams::env_stream(seed, 0);
        let mut s = grid.initial_state(0);
        let mut absorbed_at: Option<Cell> = None;
        for a in actions {
            s = grid.env_step(s, EnvAction::ALL[a], &mut rng);
            if let Some(c) = absorbed_at {
                prop_assert!(s.absorbed);
                prop_assert_eq!(s.cell, c);
            } else if s.absorbed {
                prop_assert!(grid.is_goal(s.cell));
                absorbed_at = Some(s.cell);
            }
        }
    }

    #[test]
    fn moves_stay_in_bounds_and_respect_walls(seed in any::<u64>(), actions in prop::collection::vec(0usize..5, 1..200)) {
        let grid = parse_grid(GRIDS[0].1).unwrap();
        let mut rng = streams::env_stream(seed, 1);
        let mut s = grid.initial_state(1);
        for a in actions {
            let next = grid.env_step(s, EnvAction::ALL[a], &mut rng);
            prop_assert!(grid.in_bounds(next.cell));
            let dx = next.cell.x.abs_diff(s.cell.x);
            let dy = next.cell.y.abs_diff(s.cell.y);
            prop_assert!(dx + dy <= 1);
            if dx + dy == 1 {
                prop_assert!(!grid.is_blocked(s.cell, next.cell));
            }
            s = next;
        }
    }
}
