//! Fermi-coordinate jets at boundary points and discretized boundary fields.

pub mod field;
pub mod jet;

pub use field::{sinusoidal_pi_field, varying_gamma_field, BoundaryField, BoundaryPoint, Lattice};
pub use jet::{det_expansion, inverse_metric, metric_det_sqrt, scalar_curvature_check, FermiMetricJet};
