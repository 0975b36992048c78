//! Lyapunov–Schmidt reduction toolkit for bubbling solutions of the linearly
//! perturbed boundary Yamabe problem on the upper half-space model.

pub mod core_math;
pub mod correction_solver;
pub mod error;
pub mod expansion_check;
pub mod geometry_model;
pub mod quadrature;
pub mod reduced_energy;
pub mod report;

pub use core_math::{HalfSpacePoint, ProblemParams, TraceFreeForm};
pub use error::{Error, Result};
