use serde::{Deserialize, Serialize};
use std::io::Write;

use super::grid::{Grid2D, Spacing};
use super::solver::{pcg, Operator};
use super::spline::ProfileSpline;
use crate::core_math::{ProblemParams, TraceFreeForm};
use crate::error::{Error, Result};

/// Scalar factor f with 2h_ij t ∂²_ij U = (zᵀhz) f(r, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub n: usize,
}

impl Forcing {
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let nf = self.n as f64;
        let d = (1.0 + t) * (1.0 + t) + r * r;
        2.0 * nf * (nf - 2.0) * t * d.powf(-(nf + 2.0) / 2.0)
    }
}

pub fn reduce_forcing(p: &ProblemParams, h: &TraceFreeForm) -> Result<Forcing> {
    p.validate()?;
    if h.dim() != p.d() {
        return Err(Error::Dimension { expected: p.d(), got: h.dim() });
    }
    let tr = h.matrix().trace();
    if tr.abs() > 1e-12 * h.norm_sq().sqrt().max(1.0) {
        return Err(Error::NotTraceFree { trace: tr.abs() });
    }
    Ok(Forcing { n: p.n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// w on the full grid (outer Dirichlet nodes included), row-major with r outer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedProfile {
    pub n: usize,
    pub grid: Grid2D,
    pub w: Vec<f64>,
    pub h_ref: TraceFreeForm,
    pub solve: SolveInfo,
}

pub fn grid_for(p: &ProblemParams) -> Result<Grid2D> {
    let spacing = if p.grading > 0.0 { Spacing::Graded { beta: p.grading } } else { Spacing::Uniform };
    Grid2D::new(p.r_max, p.t_max, p.n_r, p.n_t, spacing)
}

pub fn solve_reduced_bvp(p: &ProblemParams, h: &TraceFreeForm) -> Result<ReducedProfile> {
    p.validate_reduced()?;
    let f = reduce_forcing(p, h)?;
    let grid = grid_for(p)?;
    let (nr, nt) = (grid.nr(), grid.nt());
    let mut w = vec![0.0; nr * nt];
    if h.is_zero() {
        return Ok(ReducedProfile { n: p.n, grid, w, h_ref: h.clone(), solve: SolveInfo { iterations: 0, residual: 0.0 } });
    }
    let op = Operator::new(p.n, &grid);
    let b = op.rhs(&grid, |r, t| f.eval(r, t));
    let (x, st) = pcg(&op, &b, p.solver_tol, p.max_iter)?;
    tracing::debug!(iterations = st.iterations, residual = st.residual, "reduced bvp solved");
    for i in 0..op.nr {
        w[i * nt..i * nt + op.nt].copy_from_slice(&x[i * op.nt..(i + 1) * op.nt]);
    }
    Ok(ReducedProfile { n: p.n, grid, w, h_ref: h.clone(), solve: SolveInfo { iterations: st.iterations, residual: st.residual } })
}

impl ReducedProfile {
    #[inline]
    pub fn w_at(&self, i: usize, j: usize) -> f64 {
        self.w[self.grid.idx(i, j)]
    }

    /// The profile w does not depend on h; reuse it for another form of the same size.
    pub fn rebind(&self, h: &TraceFreeForm) -> Result<Self> {
        if h.dim() != self.h_ref.dim() {
            return Err(Error::Dimension { expected: self.h_ref.dim(), got: h.dim() });
        }
        if self.h_ref.is_zero() && !h.is_zero() {
            return Err(Error::ProfileMismatch(h.norm_sq().sqrt()));
        }
        Ok(Self { h_ref: h.clone(), ..self.clone() })
    }

    pub fn spline(&self) -> Result<ProfileSpline> {
        ProfileSpline::new(self.n, &self.grid.r, &self.grid.t, &self.w)
    }

    /// v(z, t) = w(|z|, t) zᵀhz.
    pub fn eval_v(&self, s: &ProfileSpline, z: &[f64], t: f64) -> f64 {
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        s.eval(r, t) * self.h_ref.quad(z)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,t,w")?;
        for (i, r) in self.grid.r.iter().enumerate() {
            for (j, t) in self.grid.t.iter().enumerate() {
                writeln!(out, "{r:e},{t:e},{:e}", self.w_at(i, j))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_params() -> ProblemParams {
        let mut p = ProblemParams::with_n(7);
        p.r_max = 30.0;
        p.t_max = 30.0;
        p.n_r = 81;
        p.n_t = 81;
        p
    }

    #[test]
    fn forcing_values() {
        let f = Forcing { n: 7 };
        assert_eq!(f.eval(0.0, 0.0), 0.0);
        assert!((f.eval(0.0, 1.0) - 70.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn forcing_matches_hessian_of_bubble() {
        use crate::core_math::bubble::bubble_radial;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = TraceFreeForm::random(6, 1.0, &mut rng);
        let z = [0.3, -0.2, 0.5, 0.1, 0.7, -0.4];
        let t = 0.8;
        let u = |z: &[f64]| bubble_radial(7, z.iter().map(|x| x * x).sum(), t);
        let e = 1e-3;
        let mut acc = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let mut zs = [[0.0; 6]; 4];
                for (k, (si, sj)) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)].iter().enumerate() {
                    zs[k] = z;
                    zs[k][i] += si * e;
                    zs[k][j] += sj * e;
                }
                let d2 = (u(&zs[0]) - u(&zs[1]) - u(&zs[2]) + u(&zs[3])) / (4.0 * e * e);
                acc += 2.0 * h.matrix()[(i, j)] * t * d2;
            }
        }
        let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = Forcing { n: 7 }.eval(r, t) * h.quad(&z);
        assert!((acc - f).abs() < 1e-5 * f.abs(), "{acc} {f}");
    }

    #[test]
    fn zero_form_gives_zero_profile() {
        let prof = solve_reduced_bvp(&small_params(), &TraceFreeForm::zeros(6)).unwrap();
        assert!(prof.w.iter().all(|&x| x == 0.0));
        assert!(prof.rebind(&TraceFreeForm::diag_pair(6, 1.0)).is_err());
    }

    #[test]
    fn profile_basic_shape() {
        let h = TraceFreeForm::diag_pair(6, 1.0);
        let prof = solve_reduced_bvp(&small_params(), &h).unwrap();
        let (nr, nt) = (prof.grid.nr(), prof.grid.nt());
        assert!(prof.w.iter().all(|x| x.is_finite()));
        assert!((0..nt).all(|j| prof.w_at(nr - 1, j) == 0.0));
        assert!(prof.w_at(0, 0) > 0.5 && prof.w_at(0, 0) < 0.7);
        let mut buf = Vec::new();
        prof.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("r,t,w\n"));
        assert_eq!(s.lines().count(), 1 + nr * nt);
    }

    #[test]
    fn linearity_of_reconstructed_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = TraceFreeForm::random(6, 0.5, &mut rng);
        let p = small_params();
        let a = solve_reduced_bvp(&p, &h).unwrap();
        let b = solve_reduced_bvp(&p, &h.scaled(2.0)).unwrap();
        let (sa, sb) = (a.spline().unwrap(), b.spline().unwrap());
        let z = [0.4, 0.1, -0.3, 0.2, 0.0, 0.5];
        let (va, vb) = (a.eval_v(&sa, &z, 0.6), b.eval_v(&sb, &z, 0.6));
        assert!((vb - 2.0 * va).abs() < 1e-9 * va.abs());
    }
}
