use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::core_math::{HalfSpacePoint, TraceFreeForm};
use crate::error::{Error, Result};

pub type Tensor3 = Vec<Vec<Vec<f64>>>;
pub type Tensor4 = Vec<Vec<Vec<Vec<f64>>>>;

const SYM_TOL: f64 = 1e-12;

/// Quadratic Fermi-coordinate data at a boundary point.
/// `dh[i][j][k]` = ∂_k h_ij, `rbar[i][k][j][l]` = R̄_ikjl, `rn[i][j]` = R_injn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermiMetricJet {
    pub h: TraceFreeForm,
    pub dh: Tensor3,
    #[serde(rename = "Rbar")]
    pub rbar: Tensor4,
    #[serde(rename = "Rn")]
    pub rn: Vec<Vec<f64>>,
    pub ric: f64,
    #[serde(rename = "Rbar_ricci")]
    pub rbar_ricci: Vec<Vec<f64>>,
    pub pi_norm_sq: f64,
    pub a: f64,
}

/// a = (n-2)/(4(n-1)) R_g with R_g = 2 ric + R̄_ii + ‖π‖².
pub fn a_from_curvature(n: usize, ric: f64, rbar_trace: f64, pi_norm_sq: f64) -> f64 {
    let nf = n as f64;
    (nf - 2.0) / (4.0 * (nf - 1.0)) * (2.0 * ric + rbar_trace + pi_norm_sq)
}

pub fn ricci_contraction(rbar: &Tensor4) -> Vec<Vec<f64>> {
    let d = rbar.len();
    (0..d).map(|i| (0..d).map(|j| (0..d).map(|k| rbar[i][k][j][k]).sum()).collect()).collect()
}

/// Kulkarni–Nomizu product (A ⊙ B)_ikjl = A_ij B_kl + A_kl B_ij − A_il B_kj − A_kj B_il.
pub fn kulkarni_nomizu(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Tensor4 {
    let d = a.nrows();
    let mut r = vec![vec![vec![vec![0.0; d]; d]; d]; d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    r[i][k][j][l] = a[(i, j)] * b[(k, l)] + a[(k, l)] * b[(i, j)] - a[(i, l)] * b[(k, j)] - a[(k, j)] * b[(i, l)];
                }
            }
        }
    }
    r
}

impl FermiMetricJet {
    /// Flat jet carrying only h (and the a it implies).
    pub fn from_h(h: TraceFreeForm) -> Self {
        let d = h.dim();
        Self::from_parts(h, vec![vec![vec![0.0; d]; d]; d], vec![vec![vec![vec![0.0; d]; d]; d]; d], vec![vec![0.0; d]; d])
    }

    /// Fills ric, R̄_ij, ‖π‖² and a from the primary tensors.
    pub fn from_parts(h: TraceFreeForm, dh: Tensor3, rbar: Tensor4, rn: Vec<Vec<f64>>) -> Self {
        let n = h.dim() + 1;
        let ric = (0..rn.len()).map(|i| rn[i][i]).sum();
        let rbar_ricci = ricci_contraction(&rbar);
        let tr: f64 = (0..rbar_ricci.len()).map(|i| rbar_ricci[i][i]).sum();
        let pi_norm_sq = h.norm_sq();
        let a = a_from_curvature(n, ric, tr, pi_norm_sq);
        Self { h, dh, rbar, rn, ric, rbar_ricci, pi_norm_sq, a }
    }

    /// Random consistent jet: R̄ from a Kulkarni–Nomizu product, every tensor of size ~`scale`.
    pub fn random<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> Self {
        let sym = |rng: &mut R| {
            let m = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
            (&m + m.transpose()) * 0.5
        };
        let a = sym(rng);
        let b = sym(rng);
        let rn = sym(rng);
        let h = TraceFreeForm::random(d, scale, rng);
        let mut dh = vec![vec![vec![0.0; d]; d]; d];
        for k in 0..d {
            let m = TraceFreeForm::random(d, scale, rng);
            for i in 0..d {
                for j in 0..d {
                    dh[i][j][k] = m.matrix()[(i, j)];
                }
            }
        }
        let rn_rows = (0..d).map(|i| (0..d).map(|j| rn[(i, j)]).collect()).collect();
        Self::from_parts(h, dh, kulkarni_nomizu(&a, &b), rn_rows)
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn n(&self) -> usize {
        self.h.dim() + 1
    }

    pub fn rbar_trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.rbar_ricci[i][i]).sum()
    }

    /// Shapes, symmetries and the derived scalars. The scalar-curvature relation
    /// for `a` is checked separately by `scalar_curvature_check`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let bad = |what: &str| Err(Error::Geometry(what.into()));
        if self.dh.len() != d || self.dh.iter().any(|x| x.len() != d || x.iter().any(|y| y.len() != d)) {
            return bad("dh has the wrong shape");
        }
        if self.rbar.len() != d || self.rbar.iter().any(|x| x.len() != d || x.iter().any(|y| y.len() != d || y.iter().any(|z| z.len() != d))) {
            return bad("Rbar has the wrong shape");
        }
        if self.rn.len() != d || self.rn.iter().any(|x| x.len() != d) {
            return bad("Rn has the wrong shape");
        }
        if self.rbar_ricci.len() != d || self.rbar_ricci.iter().any(|x| x.len() != d) {
            return bad("Rbar_ricci has the wrong shape");
        }
        let scale = self
            .rbar
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .chain(self.rn.iter().flatten())
            .chain(self.dh.iter().flatten().flatten())
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let tol = SYM_TOL * scale;
        let r = &self.rbar;
        for i in 0..d {
            for k in 0..d {
                for j in 0..d {
                    for l in 0..d {
                        let v = r[i][k][j][l];
                        if (v + r[k][i][j][l]).abs() > tol || (v + r[i][k][l][j]).abs() > tol {
                            return bad("Rbar is not antisymmetric in its index pairs");
                        }
                        if (v - r[j][l][i][k]).abs() > tol {
                            return bad("Rbar lacks pair symmetry");
                        }
                        if (v + r[i][j][l][k] + r[i][l][k][j]).abs() > tol {
                            return bad("Rbar violates the first Bianchi identity");
                        }
                    }
                }
            }
        }
        let ricci = ricci_contraction(r);
        for i in 0..d {
            for j in 0..d {
                if (ricci[i][j] - self.rbar_ricci[i][j]).abs() > tol {
                    return bad("Rbar_ricci is not the contraction of Rbar");
                }
                if (self.rn[i][j] - self.rn[j][i]).abs() > tol {
                    return bad("Rn is not symmetric");
                }
            }
        }
        for k in 0..d {
            let mut tr = 0.0;
            for i in 0..d {
                tr += self.dh[i][i][k];
                for j in 0..d {
                    if (self.dh[i][j][k] - self.dh[j][i][k]).abs() > tol {
                        return bad("dh is not symmetric in i, j");
                    }
                }
            }
            if tr.abs() > tol {
                return bad("dh is not trace-free in i, j");
            }
        }
        let ric: f64 = (0..d).map(|i| self.rn[i][i]).sum();
        if (ric - self.ric).abs() > tol {
            return bad("ric differs from the trace of Rn");
        }
        if (self.pi_norm_sq - self.h.norm_sq()).abs() > SYM_TOL * self.h.norm_sq().max(1.0) {
            return bad("pi_norm_sq differs from |h|^2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureCheck {
    pub ok: bool,
    pub residual: f64,
}

/// a against (n-2)/(4(n-1)) (2 ric + R̄_ii + ‖π‖²), tolerance 1e-12.
pub fn scalar_curvature_check(jet: &FermiMetricJet) -> CurvatureCheck {
    let expect = a_from_curvature(jet.n(), jet.ric, jet.rbar_trace(), jet.pi_norm_sq);
    let residual = (jet.a - expect).abs();
    CurvatureCheck { ok: residual <= 1e-12 * expect.abs().max(1.0), residual }
}

/// |g|^{1/2} to quadratic order.
pub fn metric_det_sqrt(jet: &FermiMetricJet, y: &HalfSpacePoint) -> f64 {
    let d = jet.dim();
    let mut zz = 0.0;
    for i in 0..d {
        for j in 0..d {
            zz += jet.rbar_ricci[i][j] * y.z[i] * y.z[j];
        }
    }
    1.0 - 0.5 * (jet.pi_norm_sq + jet.ric) * y.t * y.t - zz / 6.0
}

/// g^{ab} to quadratic order, n×n with the normal direction last.
pub fn inverse_metric(jet: &FermiMetricJet, y: &HalfSpacePoint) -> Result<DMatrix<f64>> {
    let d = jet.dim();
    if y.z.len() != d {
        return Err(Error::Dimension { expected: d, got: y.z.len() });
    }
    let h = jet.h.matrix();
    let h2 = h * h;
    let t = y.t;
    let z = &y.z;
    let mut g = DMatrix::<f64>::identity(d + 1, d + 1);
    for i in 0..d {
        for j in 0..d {
            let mut curv = 0.0;
            let mut grad = 0.0;
            for k in 0..d {
                grad += jet.dh[i][j][k] * z[k];
                for l in 0..d {
                    curv += jet.rbar[i][k][j][l] * z[k] * z[l];
                }
            }
            g[(i, j)] += 2.0 * h[(i, j)] * t + curv / 3.0 + 2.0 * grad * t + (jet.rn[i][j] + 3.0 * h2[(i, j)]) * t * t;
        }
    }
    Ok(g)
}

/// Quadratic expansion of det(g^{ij})^{-1/2} computed from the g^{ij} jet:
/// for M = I + tA + t²B + Z(z) + t C(z) it is
/// 1 − ½tr A t + (−½tr B + ¼tr A² + ⅛(tr A)²)t² − ½tr Z − ½tr C t.
#[derive(Debug, Clone, PartialEq)]
pub struct DetExpansion {
    pub t1: f64,
    pub t2: f64,
    /// coefficient matrix of z_k z_l
    pub zz: DMatrix<f64>,
    /// coefficient vector of t z_k
    pub tz: Vec<f64>,
}

pub fn det_expansion(jet: &FermiMetricJet) -> DetExpansion {
    let d = jet.dim();
    let a = jet.h.matrix() * 2.0;
    let b = DMatrix::from_fn(d, d, |i, j| jet.rn[i][j]) + jet.h.matrix() * jet.h.matrix() * 3.0;
    let tra = a.trace();
    let t2 = -0.5 * b.trace() + 0.25 * (&a * &a).trace() + 0.125 * tra * tra;
    let zz = DMatrix::from_fn(d, d, |k, l| -0.5 * (0..d).map(|i| jet.rbar[i][k][i][l]).sum::<f64>() / 3.0);
    let tz = (0..d).map(|k| -0.5 * 2.0 * (0..d).map(|i| jet.dh[i][i][k]).sum::<f64>()).collect();
    DetExpansion { t1: -0.5 * tra, t2, zz, tz }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn det_examples() {
        let mut jet = FermiMetricJet::from_h(TraceFreeForm::zeros(6));
        assert_eq!(metric_det_sqrt(&jet, &HalfSpacePoint::origin(6)), 1.0);
        jet.pi_norm_sq = 2.0;
        jet.ric = 1.0;
        let y = HalfSpacePoint::new(vec![0.3; 6], 0.1).unwrap();
        assert!((metric_det_sqrt(&jet, &y) - 0.985).abs() < 1e-15);
    }

    #[test]
    fn inverse_metric_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let jet = FermiMetricJet::random(6, 0.5, &mut rng);
        let g0 = inverse_metric(&jet, &HalfSpacePoint::origin(6)).unwrap();
        assert_eq!(g0, DMatrix::identity(7, 7));
        let t = 1e-3;
        let y = HalfSpacePoint::new(vec![0.0; 6], t).unwrap();
        let g = inverse_metric(&jet, &y).unwrap();
        let h2 = jet.h.matrix() * jet.h.matrix();
        for i in 0..6 {
            assert_eq!(g[(i, 6)], 0.0);
            for j in 0..6 {
                let lin = 2.0 * jet.h.matrix()[(i, j)] * t;
                let quad = (jet.rn[i][j] + 3.0 * h2[(i, j)]) * t * t;
                assert!((g[(i, j)] - (i == j) as u8 as f64 - lin - quad).abs() < 1e-15);
            }
        }
        assert_eq!(g[(6, 6)], 1.0);
    }

    #[test]
    fn scalar_curvature_examples() {
        let zero = FermiMetricJet::from_h(TraceFreeForm::zeros(6));
        assert!(scalar_curvature_check(&zero).ok);
        assert_eq!(zero.a, 0.0);
        assert!((a_from_curvature(7, 1.0, 2.0, 3.0) - 35.0 / 24.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut jet = FermiMetricJet::random(6, 1.0, &mut rng);
        assert!(scalar_curvature_check(&jet).ok);
        jet.a += 0.1;
        let c = scalar_curvature_check(&jet);
        assert!(!c.ok && c.residual > 0.09);
    }

    #[test]
    fn validators_reject_broken_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let jet = FermiMetricJet::random(5, 1.0, &mut rng);
        jet.validate().unwrap();
        jet.validate().unwrap();
        let mut j1 = jet.clone();
        j1.rbar[0][1][2][3] += 1e-9;
        assert!(j1.validate().is_err());
        let mut j2 = jet.clone();
        j2.rbar_ricci[1][1] += 1e-9;
        assert!(j2.validate().is_err());
        let mut j3 = jet.clone();
        j3.dh[0][0][2] += 1e-6;
        j3.dh[1][1][2] -= 1e-6 / 2.0;
        assert!(j3.validate().is_err());
        let mut j4 = jet;
        j4.ric += 1.0;
        assert!(j4.validate().is_err());
    }

    #[test]
    fn det_expansion_matches_stored_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let jet = FermiMetricJet::random(6, 0.7, &mut rng);
            let e = det_expansion(&jet);
            assert!(e.t1.abs() < 1e-12);
            assert!((e.t2 + 0.5 * (jet.pi_norm_sq + jet.ric)).abs() < 1e-12);
            for k in 0..6 {
                assert!(e.tz[k].abs() < 1e-12);
                for l in 0..6 {
                    assert!((e.zz[(k, l)] + jet.rbar_ricci[k][l] / 6.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn det_expansion_against_numeric_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let jet = FermiMetricJet::random(4, 0.5, &mut rng);
        let s = 1e-3;
        let f = |t: f64| {
            let g = inverse_metric(&jet, &HalfSpacePoint::new(vec![0.0; 4], t).unwrap()).unwrap();
            g.determinant().powf(-0.5)
        };
        let (f0, f1, f2) = (f(0.0), f(s), f(2.0 * s));
        let t1 = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * s);
        let t2 = (f0 - 2.0 * f1 + f2) / (2.0 * s * s);
        let e = det_expansion(&jet);
        assert!((t1 - e.t1).abs() < 1e-5);
        assert!((t2 - e.t2).abs() < 1e-2 * e.t2.abs().max(1.0), "{t2} {}", e.t2);
    }

    proptest! {
        #[test]
        fn kulkarni_nomizu_has_riemann_symmetries(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let jet = FermiMetricJet::random(5, 1.0, &mut rng);
            prop_assert!(jet.validate().is_ok());
            prop_assert!(scalar_curvature_check(&jet).ok);
        }
    }
}
