//! Post-hoc checks on a solved profile: far-field decay, a full-dimension
//! residual oracle, orthogonality to the kernel and grid refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::profile::{solve_reduced_bvp, Forcing, ReducedProfile};
use super::scalars::correction_scalars;
use super::spline::ProfileSpline;
use crate::core_math::{ProblemParams, SphereCubature, TraceFreeForm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// slope of log|v| against log(1+|y|)
    pub exponent: f64,
    /// smallest C with |v| ≤ C(1+|y|)^exponent on the sampled rays
    pub constant: f64,
    pub per_ray: Vec<f64>,
    /// C(1+R)^exponent relative to max|v| on the window, R the truncation radius
    pub tail: f64,
    pub window: (f64, f64),
}

/// Rays at elevation π/6, π/4, π/3 above the boundary, in the plane spanned by
/// t and the top eigenvector of h; window [R/8, R/4] with R = min(r_max, t_max).
pub fn decay_fit(prof: &ReducedProfile) -> Result<DecayFit> {
    if prof.h_ref.is_zero() || prof.w.iter().all(|&x| x == 0.0) {
        return Err(Error::FitRejected("zero field".into()));
    }
    let big = prof.grid.r_max().min(prof.grid.t_max());
    let (lo, hi) = (big / 8.0, big / 4.0);
    let s = prof.spline()?;
    let eig = nalgebra::SymmetricEigen::new(prof.h_ref.matrix().clone());
    let k = (0..eig.eigenvalues.len())
        .max_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()))
        .expect("non-empty");
    let e: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let samples = 16;
    let mut rays = Vec::new();
    let mut all = Vec::new();
    for th in [std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_3] {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for m in 0..samples {
            let rho = lo * (hi / lo).powf(m as f64 / (samples - 1) as f64);
            let z: Vec<f64> = e.iter().map(|c| c * rho * th.cos()).collect();
            let v = prof.eval_v(&s, &z, rho * th.sin());
            if v == 0.0 || !v.is_finite() {
                return Err(Error::FitRejected(format!("non-positive sample |v| = {v} at |y| = {rho}")));
            }
            xs.push((1.0 + rho).ln());
            ys.push(v.abs().ln());
            all.push((rho, v.abs()));
        }
        rays.push(slope(&xs, &ys));
    }
    let exponent = rays.iter().sum::<f64>() / rays.len() as f64;
    let constant = all.iter().map(|(r, v)| v / (1.0 + r).powf(exponent)).fold(0.0, f64::max);
    let vmax = all.iter().map(|x| x.1).fold(0.0, f64::max);
    let tail = constant * (1.0 + big).powf(exponent) / vmax;
    Ok(DecayFit { exponent, constant, per_ray: rays, tail, window: (lo, hi) })
}

pub(crate) fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

impl DecayFit {
    pub fn check_truncation(&self, tol: f64) -> Result<()> {
        if self.tail > tol {
            return Err(Error::Truncation { tail: self.tail, tol });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: usize,
    pub max_abs: f64,
    pub max_forcing: f64,
    /// max|Δv + F| / max|F|
    pub max_rel: f64,
    pub step: f64,
}

/// Full n-dimensional oracle: a fourth-order finite-difference Laplacian of the
/// reconstructed v in Cartesian coordinates, compared with F = 2h_ij t ∂²_ij U.
pub fn pde_residual_oracle(prof: &ReducedProfile, samples: usize, seed: u64) -> Result<ResidualReport> {
    let s: ProfileSpline = prof.spline()?;
    let d = prof.h_ref.dim();
    let n = prof.n;
    let f = Forcing { n };
    let eta = 0.02;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs: f64 = 0.0;
    let mut max_f: f64 = 0.0;
    let v = |x: &[f64]| prof.eval_v(&s, &x[..d], x[d]);
    for _ in 0..samples {
        let rho: f64 = rng.random_range(0.2..5.0);
        let t: f64 = rng.random_range(0.2..5.0);
        let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let nz = z.iter().map(|a| a * a).sum::<f64>().sqrt();
        z.iter_mut().for_each(|a| *a *= rho / nz);
        let mut x = z.clone();
        x.push(t);
        let centre = v(&x);
        let mut lap = 0.0;
        for k in 0..=d {
            let at = |s: f64| {
                let mut y = x.clone();
                y[k] += s * eta;
                v(&y)
            };
            lap += (-at(2.0) + 16.0 * at(1.0) - 30.0 * centre + 16.0 * at(-1.0) - at(-2.0)) / (12.0 * eta * eta);
        }
        let rhs = f.eval(rho, t) * prof.h_ref.quad(&z);
        max_abs = max_abs.max((-lap - rhs).abs());
        max_f = max_f.max(rhs.abs());
    }
    let max_rel = if max_f > 0.0 { max_abs / max_f } else { max_abs };
    Ok(ResidualReport { samples, max_abs, max_forcing: max_f, max_rel, step: eta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityReport {
    /// ∫_{∂} U^{n/(n-2)} v, relative to the same integral of |v|
    pub boundary: f64,
    /// ∫ v j_b for b = 1..n, each relative to ∫ |v j_b|
    pub jacobi: Vec<f64>,
}

impl OrthogonalityReport {
    pub fn max(&self) -> f64 {
        self.jacobi.iter().copied().fold(self.boundary.abs(), |a, b| a.max(b.abs()))
    }
}

/// Angular parts by sphere cubature, radial parts by the trapezoid rule on the grid.
pub fn orthogonality_check(prof: &ReducedProfile) -> Result<OrthogonalityReport> {
    use super::grid::trapezoid_weights;
    let d = prof.h_ref.dim();
    let nf = prof.n as f64;
    let g = &prof.grid;
    let cub = SphereCubature::new(d, 4)?;
    let h = &prof.h_ref;
    let (wr, wt) = (trapezoid_weights(&g.r), trapezoid_weights(&g.t));
    let radial_b: f64 = (0..g.nr())
        .map(|i| {
            let r = g.r[i];
            wr[i] * r.powf(nf) * (1.0 + r * r).powf(-nf / 2.0) * prof.w_at(i, 0)
        })
        .sum();
    let (mut radial_z, mut radial_t) = (0.0, 0.0);
    for i in 0..g.nr() {
        let r = g.r[i];
        for j in 0..g.nt() {
            let t = g.t[j];
            let dd = (1.0 + t) * (1.0 + t) + r * r;
            let c = wr[i] * wt[j] * r.powf(nf) * dd.powf(-nf / 2.0) * prof.w_at(i, j);
            radial_z += c * (nf - 2.0) * r;
            radial_t += c * 0.5 * (nf - 2.0) * (1.0 - t * t - r * r);
        }
    }
    let ratio = |signed: f64, abs: f64| if abs > 0.0 { signed / abs } else { 0.0 };
    let q_mean = cub.mean(|w| h.quad(w));
    let q_abs = cub.mean(|w| h.quad(w).abs());
    let boundary = ratio(q_mean * radial_b, q_abs * radial_b.abs());
    let mut jacobi: Vec<f64> = (0..d)
        .map(|i| {
            let m = cub.mean(|w| h.quad(w) * w[i]);
            let a = cub.mean(|w| (h.quad(w) * w[i]).abs());
            ratio(m * radial_z, a * radial_z.abs())
        })
        .collect();
    jacobi.push(ratio(q_mean * radial_t, q_abs * radial_t.abs()));
    Ok(OrthogonalityReport { boundary, jacobi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub points: Vec<usize>,
    pub delta_v_v: Vec<f64>,
    pub differences: Vec<f64>,
    pub order: f64,
    pub monotone: bool,
}

/// delta_v_v on grids whose interval counts double; order from the last three.
pub fn refinement_study(p: &ProblemParams, h: &TraceFreeForm, points: &[usize]) -> Result<RefinementReport> {
    if points.len() < 3 {
        return Err(Error::InvalidParam("refinement needs at least three grids".into()));
    }
    let mut vals = Vec::new();
    for &m in points {
        let mut q = p.clone();
        q.n_r = m;
        q.n_t = m;
        vals.push(correction_scalars(&solve_reduced_bvp(&q, h)?).delta_v_v);
    }
    let differences: Vec<f64> = vals.windows(2).map(|x| (x[1] - x[0]).abs()).collect();
    let k = differences.len();
    let ratio = (points[k] - 1) as f64 / (points[k - 1] - 1) as f64;
    let order = (differences[k - 2] / differences[k - 1]).ln() / ratio.ln();
    let monotone = differences.windows(2).all(|x| x[1] < x[0]);
    Ok(RefinementReport { points: points.to_vec(), delta_v_v: vals, differences, order, monotone })
}
