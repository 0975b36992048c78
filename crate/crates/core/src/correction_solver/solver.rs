//! Finite-volume discretization of
//!   -(w_rr + (n+2)/r w_r + w_tt) = f,  w_t + n w/(1+r²) = 0 at t = 0,
//! written in the weighted conservative form -∂_r(r^{n+2} w_r) - r^{n+2} w_tt = r^{n+2} f.
//! Nodes sit on the grid, fluxes on the midpoints; the axis r = 0 and the
//! boundary t = 0 carry half cells, so the axis regularity condition and the
//! Robin condition enter naturally. The outer edges are homogeneous Dirichlet.
//! The matrix is symmetric and is solved by Jacobi-preconditioned CG.

use super::grid::Grid2D;
use crate::error::{Error, Result};

/// Coefficients of the 5-point operator on the unknowns i < nr-1, j < nt-1.
#[derive(Debug, Clone)]
pub struct Operator {
    pub nr: usize,
    pub nt: usize,
    /// r-face coefficient r_{i+1/2}^{n+2}/(r_{i+1}-r_i), per i
    cr: Vec<f64>,
    /// t-face coefficient 1/(t_{j+1}-t_j), per j
    ct: Vec<f64>,
    /// weighted r-volume ∫ r^{n+2} dr over the dual cell
    pub vol_r: Vec<f64>,
    /// t-length of the dual cell
    pub len_t: Vec<f64>,
    /// Robin weight n V_i/(1+r_i²)
    robin: Vec<f64>,
    diag: Vec<f64>,
    p: f64,
}

impl Operator {
    pub fn new(n: usize, g: &Grid2D) -> Self {
        let nf = n as f64;
        let (r, t) = (&g.r, &g.t);
        let (nr, nt) = (r.len() - 1, t.len() - 1);
        let p = nf + 2.0;
        let cr: Vec<f64> = (0..nr)
            .map(|i| {
                let rm = 0.5 * (r[i] + r[i + 1]);
                rm.powf(p) / (r[i + 1] - r[i])
            })
            .collect();
        let ct: Vec<f64> = (0..nt).map(|j| 1.0 / (t[j + 1] - t[j])).collect();
        let vol_r: Vec<f64> = (0..nr)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { 0.5 * (r[i - 1] + r[i]) };
                let hi = 0.5 * (r[i] + r[i + 1]);
                (hi.powf(p + 1.0) - lo.powf(p + 1.0)) / (p + 1.0)
            })
            .collect();
        let len_t: Vec<f64> = (0..nt)
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { 0.5 * (t[j - 1] + t[j]) };
                0.5 * (t[j] + t[j + 1]) - lo
            })
            .collect();
        let robin: Vec<f64> = (0..nr).map(|i| nf * vol_r[i] / (1.0 + r[i] * r[i])).collect();
        let mut diag = vec![0.0; nr * nt];
        for i in 0..nr {
            let crs = cr[i] + if i > 0 { cr[i - 1] } else { 0.0 };
            for j in 0..nt {
                let cts = ct[j] + if j > 0 { ct[j - 1] } else { 0.0 };
                let mut dg = len_t[j] * crs + vol_r[i] * cts;
                if j == 0 {
                    dg -= robin[i];
                }
                diag[i * nt + j] = dg;
            }
        }
        Self { nr, nt, cr, ct, vol_r, len_t, robin, diag, p }
    }

    pub fn len(&self) -> usize {
        self.nr * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nr, nt) = (self.nr, self.nt);
        for i in 0..nr {
            let row = i * nt;
            let vi = self.vol_r[i];
            let cr_hi = self.cr[i];
            let cr_lo = if i > 0 { self.cr[i - 1] } else { 0.0 };
            for j in 0..nt {
                let k = row + j;
                let mut acc = self.diag[k] * x[k];
                let lj = self.len_t[j];
                if i + 1 < nr {
                    acc -= lj * cr_hi * x[k + nt];
                }
                if i > 0 {
                    acc -= lj * cr_lo * x[k - nt];
                }
                if j + 1 < nt {
                    acc -= vi * self.ct[j] * x[k + 1];
                }
                if j > 0 {
                    acc -= vi * self.ct[j - 1] * x[k - 1];
                }
                y[k] = acc;
            }
        }
    }

    /// Right-hand side ∫∫ r^{n+2} f over each dual cell, two Gauss points per
    /// direction on every quarter cell.
    pub fn rhs<F: Fn(f64, f64) -> f64>(&self, g: &Grid2D, f: F) -> Vec<f64> {
        let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let halves = |x: &[f64], k: usize| -> [(f64, f64); 2] {
            let lo = if k == 0 { x[0] } else { 0.5 * (x[k - 1] + x[k]) };
            let hi = 0.5 * (x[k] + x[k + 1]);
            [(lo, x[k]), (x[k], hi)]
        };
        let p = self.p;
        let rq: Vec<Vec<(f64, f64)>> = (0..self.nr)
            .map(|i| {
                halves(&g.r, i)
                    .iter()
                    .flat_map(|&(a, b)| gauss.map(|s| (a + s * (b - a), 0.5 * (b - a) * (a + s * (b - a)).powf(p))))
                    .collect()
            })
            .collect();
        let tq: Vec<Vec<(f64, f64)>> = (0..self.nt)
            .map(|j| {
                halves(&g.t, j)
                    .iter()
                    .flat_map(|&(a, b)| gauss.map(|s| (a + s * (b - a), 0.5 * (b - a))))
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; self.len()];
        for i in 0..self.nr {
            for j in 0..self.nt {
                let mut acc = 0.0;
                for &(r, wr) in &rq[i] {
                    for &(t, wt) in &tq[j] {
                        acc += wr * wt * f(r, t);
                    }
                }
                out[i * self.nt + j] = acc;
            }
        }
        out
    }

    pub fn robin_weights(&self) -> &[f64] {
        &self.robin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned CG; stops when ‖r‖_{D⁻¹}/‖b‖_{D⁻¹} < tol.
pub fn pcg(op: &Operator, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgStats)> {
    let n = op.len();
    let dinv: Vec<f64> = op
        .diag
        .iter()
        .map(|&d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::Indefinite(d))
            }
        })
        .collect::<Result<_>>()?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let bnorm = rz.sqrt();
    if bnorm == 0.0 {
        return Ok((x, CgStats { iterations: 0, residual: 0.0 }));
    }
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Indefinite(pap));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            z[k] = r[k] * dinv[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let rel = rz_new.max(0.0).sqrt() / bnorm;
        if rel < tol {
            return Ok((x, CgStats { iterations: it, residual: rel }));
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let rel = rz.max(0.0).sqrt() / bnorm;
    Err(Error::SolverDiverged { iterations: max_iter, residual: rel })
}
