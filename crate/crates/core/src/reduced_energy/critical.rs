use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ReducedCoefficients;
use crate::error::{Error, Result};
use crate::geometry_model::BoundaryField;

/// G(λ, q) = λ B γ(q) + λ² φ(q), for λ > 0.
pub fn g_eval(coeffs: &ReducedCoefficients, field: &BoundaryField, lambda: f64, q: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam(format!("lambda must be positive, got {lambda}")));
    }
    let gamma = field.point(q)?.gamma;
    let phi = *coeffs.phi.get(q).ok_or(Error::UnknownPoint(q))?;
    Ok(lambda * coeffs.b * gamma + lambda * lambda * phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Max,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub id: usize,
    pub gamma: f64,
    pub pi_norm_sq: f64,
    pub phi: f64,
    pub lambda_star: f64,
    #[serde(rename = "G_star")]
    pub g_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointReport {
    pub lambda0: f64,
    pub q0: usize,
    #[serde(rename = "G_value")]
    pub g_value: f64,
    /// (∂_λ G, ∂_{q_a} G ...) at (λ0, q0)
    pub gradient: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub classification: Classification,
    pub stable: bool,
    /// every id sharing the maximal G*
    pub ties: Vec<usize>,
    /// ids with φ ≥ 0, left out of the scan
    pub skipped: Vec<usize>,
    /// G(λ0, q0) is at least every value on the 5-point stencil around it
    pub stencil_max: bool,
    pub points: Vec<PointRow>,
    /// ids by decreasing G*
    pub ranking_g_star: Vec<usize>,
    /// ids by decreasing ‖π‖/γ²
    pub ranking_pi_over_gamma_sq: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    /// relative tolerance for ties in G*
    pub tie_tol: f64,
    /// eigenvalues with |μ| ≤ degenerate_tol · max|H| count as zero
    pub degenerate_tol: f64,
    /// relative λ step of the stencil check
    pub stencil_step: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        Self { tie_tol: 1e-12, degenerate_tol: 1e-9, stencil_step: 1e-3 }
    }
}

fn sort_desc(vals: &[(usize, f64)]) -> Vec<usize> {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().map(|x| x.0).collect()
}

/// Fiberwise maximizer λ*(q) = −Bγ/(2φ), G* = −B²γ²/(4φ), global argmax over q,
/// then gradient and Hessian with q-derivatives by central differences on the lattice.
pub fn find_critical(coeffs: &ReducedCoefficients, field: &BoundaryField, opts: CriticalOptions) -> Result<CriticalPointReport> {
    if coeffs.phi.len() != field.points.len() {
        return Err(Error::InvalidParam("phi must have one entry per boundary point".into()));
    }
    let b = coeffs.b;
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (pt, &phi) in field.points.iter().zip(&coeffs.phi) {
        if !(pt.gamma > 0.0) {
            return Err(Error::Geometry(format!("gamma must be positive at point {}", pt.id)));
        }
        if phi >= 0.0 {
            tracing::warn!(id = pt.id, phi, "phi is not negative; point skipped");
            skipped.push(pt.id);
            continue;
        }
        points.push(PointRow {
            id: pt.id,
            gamma: pt.gamma,
            pi_norm_sq: pt.jet.pi_norm_sq,
            phi,
            lambda_star: -b * pt.gamma / (2.0 * phi),
            g_star: -b * b * pt.gamma * pt.gamma / (4.0 * phi),
        });
    }
    if points.is_empty() {
        return Err(Error::Geometry("phi is non-negative at every point".into()));
    }
    let best = points.iter().map(|r| r.g_star).fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = points.iter().filter(|r| (best - r.g_star).abs() <= opts.tie_tol * best.abs()).map(|r| r.id).collect();
    let q0 = ties[0];
    let row = points.iter().find(|r| r.id == q0).expect("tie is a scanned point").clone();
    let lambda0 = row.lambda_star;
    let g = |lam: f64, q: usize| lam * b * field.points[q].gamma + lam * lam * coeffs.phi[q];

    let axes = field.lattice.as_ref().map_or(0, |l| l.shape.len());
    let m = 1 + axes;
    let mut grad = vec![b * row.gamma + 2.0 * lambda0 * row.phi];
    let mut hess = DMatrix::<f64>::zeros(m, m);
    hess[(0, 0)] = 2.0 * row.phi;
    let gamma = |q: usize| field.points[q].gamma;
    let phi = |q: usize| coeffs.phi[q];
    let mut stencil_max = g(lambda0, q0) >= g(lambda0 * (1.0 + opts.stencil_step), q0)
        && g(lambda0, q0) >= g(lambda0 * (1.0 - opts.stencil_step), q0);
    if let Some(l) = &field.lattice {
        let nb: Vec<(usize, usize)> = (0..axes)
            .map(|a| field.neighbours(q0, a).ok_or_else(|| Error::Geometry("critical point on a non-periodic lattice edge".into())))
            .collect::<Result<_>>()?;
        for a in 0..axes {
            let (lo, hi) = nb[a];
            let s = l.spacing[a];
            let dgam = (gamma(hi) - gamma(lo)) / (2.0 * s);
            let dphi = (phi(hi) - phi(lo)) / (2.0 * s);
            grad.push(lambda0 * b * dgam + lambda0 * lambda0 * dphi);
            hess[(0, 1 + a)] = b * dgam + 2.0 * lambda0 * dphi;
            hess[(1 + a, 0)] = hess[(0, 1 + a)];
            let d2 = |f: &dyn Fn(usize) -> f64| (f(hi) - 2.0 * f(q0) + f(lo)) / (s * s);
            hess[(1 + a, 1 + a)] = lambda0 * b * d2(&gamma) + lambda0 * lambda0 * d2(&phi);
            stencil_max &= g(lambda0, q0) >= g(lambda0, lo) && g(lambda0, q0) >= g(lambda0, hi);
            for c in (a + 1)..axes {
                let sc = l.spacing[c];
                let corner = |qa: usize, up: bool| {
                    let (m_, p_) = field.neighbours(qa, c).expect("periodic lattice");
                    if up {
                        p_
                    } else {
                        m_
                    }
                };
                let (pp, pm, mp, mm) = (corner(hi, true), corner(hi, false), corner(lo, true), corner(lo, false));
                let mixed = |f: &dyn Fn(usize) -> f64| (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * s * sc);
                let v = lambda0 * b * mixed(&gamma) + lambda0 * lambda0 * mixed(&phi);
                hess[(1 + a, 1 + c)] = v;
                hess[(1 + c, 1 + a)] = v;
            }
        }
    }
    let eig = SymmetricEigen::new(hess.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    let scale = hess.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let classification = if eigenvalues.iter().any(|e| e.abs() <= opts.degenerate_tol * scale) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(|&e| e < 0.0) {
        Classification::Max
    } else {
        Classification::Saddle
    };
    let ranking_g_star = sort_desc(&points.iter().map(|r| (r.id, r.g_star)).collect::<Vec<_>>());
    let ranking_pi_over_gamma_sq =
        sort_desc(&points.iter().map(|r| (r.id, r.pi_norm_sq.sqrt() / (r.gamma * r.gamma))).collect::<Vec<_>>());
    Ok(CriticalPointReport {
        lambda0,
        q0,
        g_value: g(lambda0, q0),
        gradient: grad,
        hessian: (0..m).map(|i| (0..m).map(|j| hess[(i, j)]).collect()).collect(),
        eigenvalues,
        classification,
        stable: classification == Classification::Max,
        ties,
        skipped,
        stencil_max,
        points,
        ranking_g_star,
        ranking_pi_over_gamma_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry_model::{sinusoidal_pi_field, varying_gamma_field};

    fn coeffs_for(field: &BoundaryField, b: f64, kappa: f64) -> ReducedCoefficients {
        let mut c = ReducedCoefficients::new(field.n, 1.0, b);
        c.phi = field.points.iter().map(|p| -kappa * p.jet.pi_norm_sq).collect();
        c
    }

    #[test]
    fn g_eval_examples() {
        let f = sinusoidal_pi_field(7, &[8], 1.0, 1.0).unwrap();
        let mut c = ReducedCoefficients::new(7, 1.0, 1.0);
        c.phi = vec![-1.0; 8];
        assert!((g_eval(&c, &f, 0.5, 0).unwrap() - 0.25).abs() < 1e-15);
        assert!(g_eval(&c, &f, 0.0, 0).is_err());
        assert!(g_eval(&c, &f, 1.0, 99).is_err());
        let lam = -c.b * 1.0 / (2.0 * c.phi[0]);
        let e = 1e-6;
        let d = (g_eval(&c, &f, lam + e, 0).unwrap() - g_eval(&c, &f, lam - e, 0).unwrap()) / (2.0 * e);
        assert!(d.abs() < 1e-9);
    }

    #[test]
    fn sinusoidal_maximizer_at_sin_zero() {
        let f = sinusoidal_pi_field(7, &[16], 1.0, 1.0).unwrap();
        let c = coeffs_for(&f, 0.7, 0.3);
        let r = find_critical(&c, &f, CriticalOptions::default()).unwrap();
        assert_eq!(r.q0, 0);
        assert_eq!(r.ties, vec![0, 8]);
        assert_eq!(r.classification, Classification::Max);
        assert!(r.stable && r.stencil_max);
        assert_eq!(r.hessian[0][0], 2.0 * c.phi[0]);
        assert!((r.lambda0 + c.b / (2.0 * c.phi[0])).abs() < 1e-15);
        assert!(r.gradient.iter().all(|g| g.abs() < 1e-12));
        let g3 = BoundaryField { points: f.points.iter().cloned().map(|mut p| { p.gamma *= 3.0; p }).collect(), ..f.clone() };
        let r3 = find_critical(&c, &g3, CriticalOptions::default()).unwrap();
        assert_eq!(r3.q0, r.q0);
        assert!((r3.lambda0 - 3.0 * r.lambda0).abs() < 1e-12);
        assert!((r3.g_value - 9.0 * r.g_value).abs() < 1e-12);
    }

    #[test]
    fn flat_field_is_degenerate() {
        let f = varying_gamma_field(7, &[6], 1.0, 1.0).unwrap();
        let f = BoundaryField { points: f.points.into_iter().map(|mut p| { p.gamma = 1.0; p }).collect(), ..f };
        let mut c = ReducedCoefficients::new(7, 1.0, 1.0);
        c.phi = vec![-1.0; 6];
        let r = find_critical(&c, &f, CriticalOptions::default()).unwrap();
        assert!((r.lambda0 - 0.5).abs() < 1e-15);
        assert_eq!(r.classification, Classification::Degenerate);
        assert!(!r.stable);
    }

    #[test]
    fn varying_gamma_two_d() {
        let f = varying_gamma_field(7, &[8, 8], 1.0, 1.0).unwrap();
        let c = coeffs_for(&f, 0.6, 0.2);
        let r = find_critical(&c, &f, CriticalOptions::default()).unwrap();
        // γ is largest at θ = (π/2, π/2)
        assert_eq!(r.q0, 2 * 8 + 2);
        assert_eq!(r.classification, Classification::Max);
        assert_eq!(r.hessian.len(), 3);
        assert_eq!(r.ranking_g_star[0], r.q0);
    }

    #[test]
    fn positive_phi_points_are_skipped() {
        let f = sinusoidal_pi_field(7, &[4], 1.0, 1.0).unwrap();
        let mut c = coeffs_for(&f, 1.0, 1.0);
        c.phi[1] = 0.1;
        let r = find_critical(&c, &f, CriticalOptions::default()).unwrap();
        assert_eq!(r.skipped, vec![1]);
    }
}
