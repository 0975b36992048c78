//! Numerical correction v(z,t) = w(|z|,t) zᵀhz on a truncated half-space.

pub mod diagnostics;
pub mod grid;
pub mod profile;
pub mod scalars;
pub mod solver;
pub mod spline;

pub use diagnostics::{decay_fit, orthogonality_check, pde_residual_oracle, refinement_study, DecayFit};
pub use grid::{Grid2D, Spacing};
pub use profile::{reduce_forcing, solve_reduced_bvp, Forcing, ReducedProfile};
pub use scalars::{correction_scalars, CorrectionScalars, ProfileIntegrals};
