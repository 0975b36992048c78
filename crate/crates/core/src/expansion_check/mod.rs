//! Term-by-term numerical check of the small-scale energy expansion around a
//! boundary point, and of the boundary-mismatch part of the remainder.
//!
//! Every integral is taken in blown-up coordinates over |y| < R/δ with the metric
//! replaced by its quadratic Fermi jet, reduced to the (|z|, t) quarter plane and
//! a product cubature on the z-sphere.

mod combined;
mod engine;
mod fit;
mod remainder;
mod terms;

pub use combined::{combined_expansion_fit, lambda_parabola, LambdaParabola};
pub use engine::ExpansionOptions;
pub use fit::{fit_powers, local_orders, log_slope, rel_err, TermFit, TermId};
pub use remainder::{remainder_scaling, Cutoff};
pub use terms::{i1prime_coefficient, verify_i1prime, verify_i2, verify_i3, verify_i4_and_cross, verify_i5};
