//! Sphere areas, angular moments and a product Gauss cubature on S^{d-1}.

use nalgebra::{DMatrix, SymmetricEigen};
use super::integrals::gamma_fn as gamma;

use super::forms::TraceFreeForm;
use super::params::ProblemParams;
use crate::error::{Error, Result};

/// Area of the unit sphere S^{d-1} in R^d.
pub fn sphere_area(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidParam("sphere_area needs d >= 1".into()));
    }
    let h = 0.5 * d as f64;
    Ok(2.0 * std::f64::consts::PI.powf(h) / gamma(h))
}

/// ω_{n-1} := area(S^{n-2}), the sphere of the boundary R^{n-1}.
pub fn omega(n: usize) -> f64 {
    sphere_area(n - 1).expect("n >= 2")
}

/// ∫_{S^{n-2}} (ω^T h ω)^2 dω = 2|h|^2 ω_{n-1} / ((n-1)(n+1)).
pub fn quartic_moment_constant(p: &ProblemParams, h: &TraceFreeForm) -> Result<f64> {
    if h.dim() != p.d() {
        return Err(Error::Dimension { expected: p.d(), got: h.dim() });
    }
    Ok(quartic_moment(p.n, h.norm_sq()))
}

pub fn quartic_moment(n: usize, h_norm_sq: f64) -> f64 {
    let nf = n as f64;
    2.0 * h_norm_sq * omega(n) / ((nf - 1.0) * (nf + 1.0))
}

/// Mean over S^{d-1} of ω_{i1}...ω_{i2k}: the pairing count divided by d(d+2)...(d+2k-2).
pub fn isotropic_moment(d: usize, idx: &[usize]) -> f64 {
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let k = idx.len() / 2;
    let mut denom = 1.0;
    for j in 0..k {
        denom *= (d + 2 * j) as f64;
    }
    pairings(idx) as f64 / denom
}

fn pairings(idx: &[usize]) -> u64 {
    if idx.is_empty() {
        return 1;
    }
    let first = idx[0];
    let rest = &idx[1..];
    let mut total = 0;
    for j in 0..rest.len() {
        if rest[j] == first {
            let mut r: Vec<usize> = rest.to_vec();
            r.remove(j);
            total += pairings(&r);
        }
    }
    total
}

/// Gauss rule for ∫_{-1}^{1} g(x)(1-x²)^a dx via Golub–Welsch.
pub fn gauss_gegenbauer(m: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    let mut jm = DMatrix::<f64>::zeros(m, m);
    for j in 1..m {
        let jf = j as f64;
        let b2 = jf * (jf + 2.0 * a) / ((2.0 * jf + 2.0 * a).powi(2) - 1.0);
        jm[(j, j - 1)] = b2.sqrt();
        jm[(j - 1, j)] = b2.sqrt();
    }
    let mu0 = std::f64::consts::PI.sqrt() * gamma(a + 1.0) / gamma(a + 1.5);
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    nodes.sort_by(|x, y| x.0.total_cmp(&y.0));
    (nodes.iter().map(|x| x.0).collect(), nodes.iter().map(|x| x.1).collect())
}

/// Product cubature on S^{d-1} in hyperspherical coordinates, weights normalized to sum 1.
///
/// With `m` Gauss points per polar angle and 2m equispaced azimuths the rule
/// integrates every polynomial of degree <= 2m-1 exactly.
#[derive(Debug, Clone)]
pub struct SphereCubature {
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereCubature {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParam("sphere cubature needs d >= 2".into()));
        }
        if m < 1 {
            return Err(Error::InvalidParam("need at least one node per angle".into()));
        }
        // angle θ_k (k = 0..d-3) carries weight sin^{d-2-k} θ_k
        let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..d.saturating_sub(2))
            .map(|k| gauss_gegenbauer(m, 0.5 * ((d - 2 - k) as f64 - 1.0)))
            .collect();
        let naz = 2 * m;
        let mut points = vec![vec![1.0; 0]];
        let mut weights = vec![1.0];
        let mut prefix = vec![1.0];
        for (xs, ws) in &rules {
            let mut np = Vec::new();
            let mut nw = Vec::new();
            let mut npre = Vec::new();
            for (pt, (w, s)) in points.iter().zip(weights.iter().zip(&prefix)) {
                for (x, wx) in xs.iter().zip(ws) {
                    let mut q = pt.clone();
                    q.push(s * x);
                    np.push(q);
                    nw.push(w * wx);
                    npre.push(s * (1.0 - x * x).max(0.0).sqrt());
                }
            }
            points = np;
            weights = nw;
            prefix = npre;
        }
        let mut fp = Vec::with_capacity(points.len() * naz);
        let mut fw = Vec::with_capacity(points.len() * naz);
        for (pt, (w, s)) in points.iter().zip(weights.iter().zip(&prefix)) {
            for k in 0..naz {
                let phi = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / naz as f64;
                let mut q = pt.clone();
                q.push(s * phi.cos());
                q.push(s * phi.sin());
                fp.push(q);
                fw.push(*w);
            }
        }
        let total: f64 = fw.iter().sum();
        for w in &mut fw {
            *w /= total;
        }
        Ok(Self { d, points: fp, weights: fw })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean of f over the sphere.
    pub fn mean<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_math::forms::random_rotation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use std::f64::consts::PI;

    #[test]
    fn areas() {
        assert!((sphere_area(2).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(6).unwrap() - PI.powi(3)).abs() < 1e-12);
        assert!(sphere_area(0).is_err());
    }

    #[test]
    fn quartic_moment_examples() {
        let p = ProblemParams::with_n(7);
        assert_eq!(quartic_moment_constant(&p, &TraceFreeForm::zeros(6)).unwrap(), 0.0);
        let h = TraceFreeForm::diag_pair(6, 1.0);
        let v = quartic_moment_constant(&p, &h).unwrap();
        assert!((v - PI.powi(3) / 12.0).abs() < 1e-13);
        let v3 = quartic_moment_constant(&p, &h.scaled(3.0)).unwrap();
        assert!((v3 - 9.0 * v).abs() < 1e-12);
    }

    #[test]
    fn quartic_moment_monte_carlo() {
        let p = ProblemParams::with_n(7);
        let h = TraceFreeForm::diag_pair(6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples = 10_000_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let mut w: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
            let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x /= nrm);
            acc += h.quad(&w).powi(2);
        }
        let mc = acc / samples as f64 * omega(7);
        let exact = quartic_moment_constant(&p, &h).unwrap();
        assert!((mc - exact).abs() / exact < 1e-3, "mc {mc} exact {exact}");
    }

    #[test]
    fn cubature_matches_isotropic_moments() {
        let c = SphereCubature::new(6, 6).unwrap();
        assert_eq!(c.len(), 6usize.pow(4) * 12);
        let idx_sets: [&[usize]; 6] = [&[0, 0], &[0, 1], &[2, 2, 2, 2], &[0, 0, 3, 3], &[1, 1, 4, 4, 5, 5], &[0, 0, 0, 0, 0, 0, 5, 5, 5, 5]];
        for idx in idx_sets {
            let m = c.mean(|w| idx.iter().map(|&i| w[i]).product());
            assert!((m - isotropic_moment(6, idx)).abs() < 1e-14, "{idx:?}");
        }
        let odd = c.mean(|w| w[0] * w[1] * w[1]);
        assert!(odd.abs() < 1e-16);
    }

    #[test]
    fn cubature_small_dimensions() {
        let c = SphereCubature::new(2, 4).unwrap();
        assert!((c.mean(|w| w[0] * w[0]) - 0.5).abs() < 1e-15);
        let c = SphereCubature::new(3, 5).unwrap();
        assert!((c.mean(|w| w[2].powi(4)) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn quartic_moment_rotation_invariant() {
        let p = ProblemParams::with_n(7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let h = TraceFreeForm::random(6, 1.3, &mut rng);
            let q = random_rotation(6, &mut rng);
            let a = quartic_moment_constant(&p, &h).unwrap();
            let b = quartic_moment_constant(&p, &h.conjugate(&q).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-10 * a);
        }
    }

    #[test]
    fn cubature_reproduces_quartic_moment() {
        let c = SphereCubature::new(6, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = TraceFreeForm::random(6, 0.7, &mut rng);
        let m = c.mean(|w| h.quad(w).powi(2)) * omega(7);
        assert!((m - quartic_moment(7, h.norm_sq())).abs() < 1e-13);
    }
}
