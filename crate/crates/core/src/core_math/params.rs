use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension, truncation radii, grid sizes and tolerances shared by every operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemParams {
    pub n: usize,
    pub quad_tol: f64,
    pub r_max: f64,
    pub t_max: f64,
    pub n_r: usize,
    pub n_t: usize,
    /// Exponential grading strength of the solver grid; 0 gives a uniform grid.
    pub grading: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            n: 7,
            quad_tol: 1e-10,
            r_max: 60.0,
            t_max: 60.0,
            n_r: 600,
            n_t: 600,
            grading: 5.0,
            solver_tol: 1e-10,
            max_iter: 200_000,
        }
    }
}

impl ProblemParams {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn with_grid(mut self, n_r: usize, n_t: usize) -> Self {
        self.n_r = n_r;
        self.n_t = n_t;
        self
    }

    /// Checks shared by all operations; integral operations need n >= 3.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParam(format!("n = {} < 3", self.n)));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol <= 1e-4) {
            return Err(Error::InvalidParam(format!("quad_tol = {} outside (0, 1e-4]", self.quad_tol)));
        }
        if !(self.r_max > 0.0 && self.t_max > 0.0) {
            return Err(Error::InvalidParam("r_max and t_max must be positive".into()));
        }
        if self.n_r < 16 || self.n_t < 16 {
            return Err(Error::InvalidParam(format!("grid {}x{} below 16 points per axis", self.n_r, self.n_t)));
        }
        if !(self.grading >= 0.0 && self.grading.is_finite()) {
            return Err(Error::InvalidParam("grading must be finite and non-negative".into()));
        }
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            return Err(Error::InvalidParam("solver_tol must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// The reduced energy and the expansion are only meaningful for n >= 7.
    pub fn validate_reduced(&self) -> Result<()> {
        self.validate()?;
        if self.n < 7 {
            return Err(Error::InvalidParam(format!("n = {} but the reduced energy needs n >= 7", self.n)));
        }
        Ok(())
    }

    /// Boundary dimension n - 1.
    pub fn d(&self) -> usize {
        self.n - 1
    }
}

/// A point y = (z, t) of the closed upper half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpacePoint {
    pub z: Vec<f64>,
    pub t: f64,
}

impl HalfSpacePoint {
    pub fn new(z: Vec<f64>, t: f64) -> Result<Self> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeT(t));
        }
        Ok(Self { z, t })
    }

    pub fn origin(d: usize) -> Self {
        Self { z: vec![0.0; d], t: 0.0 }
    }

    pub fn z_norm_sq(&self) -> f64 {
        self.z.iter().map(|x| x * x).sum()
    }
}
