#![allow(dead_code)]

use std::sync::OnceLock;

use normsol::radial::{shoot_ground_state, GroundState, ShootingPolicy};
use normsol::synchronized::{solve_sigma, CouplingMatrix, SigmaOutcome, SynchronizedState};
use proptest::test_runner::{Config, RngSeed};

/// Cubic ground state in dimension 1..=3, computed once per test binary.
pub fn cubic(dim: usize) -> &'static GroundState {
    static CELLS: [OnceLock<GroundState>; 4] = [const { OnceLock::new() }; 4];
    CELLS[dim].get_or_init(|| shoot_ground_state(dim, 3.0, &ShootingPolicy::default()).unwrap())
}

/// Seeded so that runs are reproducible.
pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
}

pub fn state(rows: &[Vec<f64>]) -> SynchronizedState {
    match solve_sigma(&CouplingMatrix::from_rows(rows).unwrap()).unwrap() {
        SigmaOutcome::State(s) => s,
        other => panic!("no synchronized state: {other:?}"),
    }
}

/// `σ² = (1/7, 2/7)`.
pub fn example_one() -> SynchronizedState {
    state(&[vec![1.0, 3.0], vec![3.0, 2.0]])
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
