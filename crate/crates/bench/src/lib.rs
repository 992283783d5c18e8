//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinfluid_core::initial::{make_initial_data, Generator};
use kinfluid_core::{Dynamics, HermiteSpec, PerturbationState, SpatialGrid, SystemParams};

/// One-dimensional torus dynamics with prepared initial data of amplitude 0.01.
pub fn torus(n: usize, degree_cap: usize) -> (Dynamics, PerturbationState) {
    let grid = SpatialGrid::new(1, n, 2.0 * PI).expect("valid grid");
    let spec = HermiteSpec::one_dim(degree_cap).expect("valid cap");
    let params = SystemParams::new(0.0, 0.5, 2.0).expect("valid params");
    let dy = Dynamics::new(grid, spec, params).expect("consistent setup");
    let x0 = make_initial_data(Generator::PreparedSmooth, grid, spec, 1e-2, 0).expect("valid data");
    (dy, x0)
}

/// Seeded uniform samples in `[-1, 1)`.
pub fn samples(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}
