//! Fixtures shared by the benchmarks.

use boundary_bubble::correction_solver::{solve_reduced_bvp, ReducedProfile};
use boundary_bubble::geometry_model::FermiMetricJet;
use boundary_bubble::{ProblemParams, TraceFreeForm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn params(grid: usize) -> ProblemParams {
    ProblemParams::with_n(7).with_grid(grid, grid)
}

pub fn jet(seed: u64) -> FermiMetricJet {
    FermiMetricJet::random(6, 0.3, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn profile(grid: usize, h: &TraceFreeForm) -> ReducedProfile {
    solve_reduced_bvp(&params(grid), h).expect("bench solve converges")
}
