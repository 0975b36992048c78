//! Integrals of v = w(|z|,t) zᵀhz collapsed to weighted (r,t) quadratures.
//! Radial parts use Simpson weights and five-point derivatives on the grid.
//! Every angular factor is the quartic moment ∫_S (ωᵀhω)², which is why the
//! scalars depend on h only through ‖h‖².

use serde::{Deserialize, Serialize};

use super::grid::{derivative5, simpson_weights, Spacing};
use super::profile::{Forcing, ReducedProfile};
use crate::core_math::sphere::quartic_moment;
use crate::core_math::TraceFreeForm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_r: usize,
    pub n_t: usize,
    pub r_max: f64,
    pub t_max: f64,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionScalars {
    pub delta_v_v: f64,
    pub dirichlet: f64,
    pub boundary_quad: f64,
    pub cross_term: f64,
    pub n: usize,
    pub h_norm_sq: f64,
    pub grid: GridMeta,
}

impl CorrectionScalars {
    /// |∫Δv v + ∫|∇v|² − n∫U^{2/(n-2)}v²| / ∫|∇v|².
    pub fn ibp_defect(&self) -> f64 {
        rel(self.delta_v_v + self.dirichlet - self.boundary_quad, self.dirichlet)
    }

    /// |cross − boundary + dirichlet| / dirichlet.
    pub fn reduction_defect(&self) -> f64 {
        rel(self.cross_term - self.boundary_quad + self.dirichlet, self.dirichlet)
    }
}

fn rel(x: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        x.abs()
    } else {
        (x / scale).abs()
    }
}

/// The h-independent (r,t) quadratures of w. Every scalar is one of these
/// times the quartic moment of h, so one set serves every form rebound to w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileIntegrals {
    pub n: usize,
    pub forcing: f64,
    pub dirichlet: f64,
    pub boundary: f64,
    pub cross: f64,
    pub grid: GridMeta,
}

impl ProfileIntegrals {
    pub fn of(prof: &ReducedProfile) -> Self {
        let n = prof.n;
        let nf = n as f64;
        let g = &prof.grid;
        let (nr, nt) = (g.nr(), g.nt());
        let wr = simpson_weights(&g.r);
        let wt = simpson_weights(&g.t);
        let f = Forcing { n };
        let p = nf + 2.0;

        let mut w_r = vec![0.0; nr * nt];
        let mut w_t = vec![0.0; nr * nt];
        let mut col = vec![0.0; nr];
        for j in 0..nt {
            for i in 0..nr {
                col[i] = prof.w_at(i, j);
            }
            for (i, d) in derivative5(&g.r, &col).into_iter().enumerate() {
                w_r[i * nt + j] = d;
            }
        }
        for i in 0..nr {
            let d = derivative5(&g.t, &prof.w[i * nt..(i + 1) * nt]);
            w_t[i * nt..(i + 1) * nt].copy_from_slice(&d);
        }

        let (mut fw, mut cross, mut dir) = (0.0, 0.0, 0.0);
        for i in 0..nr {
            let r = g.r[i];
            let (rp, rn1, rn) = (r.powf(p), r.powf(nf + 1.0), r.powf(nf));
            for j in 0..nt {
                let t = g.t[j];
                let k = i * nt + j;
                let w = prof.w[k];
                let c = wr[i] * wt[j];
                fw += c * rp * f.eval(r, t) * w;
                dir += c * rp * (w_r[k] * w_r[k] + w_t[k] * w_t[k]);
                let dd = (1.0 + t) * (1.0 + t) + r * r;
                cross += c * t * dd.powf(-nf / 2.0) * (rn1 * w_r[k] + (nf + 1.0) * rn * w);
            }
        }
        let bq: f64 = (0..nr).map(|i| wr[i] * g.r[i].powf(p) * prof.w_at(i, 0).powi(2) / (1.0 + g.r[i] * g.r[i])).sum();
        let grid = GridMeta { n_r: nr, n_t: nt, r_max: g.r_max(), t_max: g.t_max(), spacing: g.spacing };
        Self { n, forcing: fw, dirichlet: dir, boundary: bq, cross, grid }
    }

    /// The scalars of v = w zᵀhz.
    pub fn scalars(&self, h: &TraceFreeForm) -> CorrectionScalars {
        let nf = self.n as f64;
        let m4 = quartic_moment(self.n, h.norm_sq());
        CorrectionScalars {
            delta_v_v: -m4 * self.forcing,
            dirichlet: m4 * self.dirichlet,
            boundary_quad: nf * m4 * self.boundary,
            cross_term: -2.0 * (nf - 2.0) * m4 * self.cross,
            n: self.n,
            h_norm_sq: h.norm_sq(),
            grid: self.grid,
        }
    }
}

pub fn correction_scalars(prof: &ReducedProfile) -> CorrectionScalars {
    ProfileIntegrals::of(prof).scalars(&prof.h_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction_solver::profile::solve_reduced_bvp;
    use crate::core_math::ProblemParams;

    fn params(m: usize) -> ProblemParams {
        let mut p = ProblemParams::with_n(7);
        p.r_max = 40.0;
        p.t_max = 40.0;
        p.n_r = m;
        p.n_t = m;
        p
    }

    #[test]
    fn zero_form_scalars_vanish() {
        let prof = solve_reduced_bvp(&params(41), &TraceFreeForm::zeros(6)).unwrap();
        let s = correction_scalars(&prof);
        assert_eq!([s.delta_v_v, s.dirichlet, s.boundary_quad, s.cross_term], [0.0; 4]);
    }

    #[test]
    fn identities_on_moderate_grid() {
        let h = TraceFreeForm::diag_pair(6, 0.3);
        let prof = solve_reduced_bvp(&params(201), &h).unwrap();
        let s = correction_scalars(&prof);
        assert!(s.delta_v_v < 0.0);
        assert!(s.ibp_defect() < 1e-2, "{s:?}");
        assert!(s.reduction_defect() < 1e-2, "{s:?}");
        let s2 = correction_scalars(&prof.rebind(&h.scaled(3.0)).unwrap());
        assert!((s2.delta_v_v - 9.0 * s.delta_v_v).abs() < 1e-12 * s.delta_v_v.abs());
        assert_eq!(ProfileIntegrals::of(&prof).scalars(&h.scaled(3.0)), s2);
    }
}
