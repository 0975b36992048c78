use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric trace-free (n-1)x(n-1) form, the trace-free second fundamental form h_ij.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFreeForm {
    entries: DMatrix<f64>,
    norm_sq: f64,
}

impl TraceFreeForm {
    /// Builds from the upper triangle of `m`; rejects asymmetry above 1e-12 and a non-zero trace.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension { expected: m.nrows(), got: m.ncols() });
        }
        let d = m.nrows();
        let scale = m.amax().max(1e-300);
        let mut asym: f64 = 0.0;
        for i in 0..d {
            for j in 0..i {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::NotSymmetric { asym });
        }
        let mut s = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                s[(i, j)] = m[(i, j)];
                s[(j, i)] = m[(i, j)];
            }
        }
        let norm_sq = s.iter().map(|x| x * x).sum::<f64>();
        let trace = s.trace();
        if trace.abs() > 1e-12 * norm_sq.sqrt().max(1e-300) && trace != 0.0 {
            return Err(Error::NotTraceFree { trace });
        }
        Ok(Self { entries: s, norm_sq })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        for r in rows {
            if r.len() != d {
                return Err(Error::Dimension { expected: d, got: r.len() });
            }
        }
        Self::from_matrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn zeros(d: usize) -> Self {
        Self { entries: DMatrix::zeros(d, d), norm_sq: 0.0 }
    }

    /// diag(c, -c, 0, ..., 0)
    pub fn diag_pair(d: usize, c: f64) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = c;
        m[(1, 1)] = -c;
        Self::from_matrix(m).expect("trace-free by construction")
    }

    /// Gaussian symmetric matrix projected to trace zero and rescaled to Frobenius norm `norm`.
    pub fn random<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> Self {
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let x: f64 = rng.sample(StandardNormal);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let tr = m.trace() / d as f64;
        for i in 0..d {
            m[(i, i)] -= tr;
        }
        let f = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        m *= norm / f;
        // re-centre the diagonal so rounding leaves the trace at exactly representable zero
        let tr = m.trace() / d as f64;
        for i in 0..d {
            m[(i, i)] -= tr;
        }
        Self::from_matrix(m).expect("trace-free by construction")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn is_zero(&self) -> bool {
        self.norm_sq == 0.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { entries: &self.entries * c, norm_sq: self.norm_sq * c * c }
    }

    /// Q h Q^T for an orthogonal Q.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Result<Self> {
        let m = q * &self.entries * q.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let d = m.nrows();
        let mut m = m;
        let tr = m.trace() / d as f64;
        for i in 0..d {
            m[(i, i)] -= tr;
        }
        Self::from_matrix(m)
    }

    /// z^T h z
    pub fn quad(&self, z: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            let mut row = 0.0;
            for j in 0..d {
                row += self.entries[(i, j)] * z[j];
            }
            s += z[i] * row;
        }
        s
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        self.entries.clone().symmetric_eigenvalues().amax()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.entries[(i, j)]).collect()).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries).amax()
    }
}

impl Serialize for TraceFreeForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TraceFreeForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        TraceFreeForm::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign correction).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_trace_and_asymmetry() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(TraceFreeForm::from_matrix(m), Err(Error::NotTraceFree { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, -1.0]);
        assert!(matches!(TraceFreeForm::from_matrix(m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn random_form_has_requested_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = TraceFreeForm::random(6, 2.5, &mut rng);
        assert!((h.norm_sq() - 6.25).abs() < 1e-12);
        assert!(h.matrix().trace().abs() < 1e-14);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = random_rotation(6, &mut rng);
        let e = (&q * q.transpose() - DMatrix::identity(6, 6)).amax();
        assert!(e < 1e-13);
    }
}
