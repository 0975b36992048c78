use serde::{Deserialize, Serialize};

use crate::core_math::{sphere_area, SphereCubature};
use crate::correction_solver::spline::{CubicSpline, EndCondition};
use crate::correction_solver::ReducedProfile;
use crate::error::{Error, Result};
use crate::geometry_model::FermiMetricJet;
use crate::quadrature::{gauss_legendre, geometric_breaks};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionOptions {
    /// Integrals run over |y| < cutoff_radius / δ in blown-up coordinates.
    pub cutoff_radius: f64,
    /// Gauss points per polar angle of the interior sphere rule.
    pub angular_order: usize,
    /// Same for the boundary rule; the I₄ integrand is not polynomial on the sphere.
    pub boundary_angular_order: usize,
    pub panel_nodes: usize,
    pub theta_nodes: usize,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self { cutoff_radius: 4.0, angular_order: 5, boundary_angular_order: 7, panel_nodes: 16, theta_nodes: 24 }
    }
}

impl ExpansionOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_radius > 0.0 && self.cutoff_radius.is_finite()) {
            return Err(Error::InvalidParam("cutoff_radius must be positive".into()));
        }
        if self.angular_order < 5 || self.boundary_angular_order < 5 {
            return Err(Error::InvalidParam("angular orders below 5 are not exact for the interior integrands".into()));
        }
        if self.panel_nodes < 4 || self.theta_nodes < 4 {
            return Err(Error::InvalidParam("need at least 4 nodes per panel".into()));
        }
        Ok(())
    }
}

/// Per-node angular data. `pairs` holds, for (ω,ω), (ω,hω), (hω,hω), the five
/// bilinear pieces of the g^{ij} jet: a·b, aᵀhb, R̄(·,ω,·,ω)(a,b), ∂_ω h(a,b), aᵀ(Rn+3h²)b.
struct Angular {
    w: Vec<f64>,
    s_h: Vec<f64>,
    s_r: Vec<f64>,
    pairs: Vec<[f64; 15]>,
}

impl Angular {
    fn new(jet: &FermiMetricJet, m: usize, with_pairs: bool) -> Result<Self> {
        let d = jet.dim();
        let cub = SphereCubature::new(d, m)?;
        let h = jet.h.matrix();
        let hm = h * h;
        let mm: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| jet.rn[i][j] + 3.0 * hm[(i, j)]).collect()).collect();
        let bil = |m: &dyn Fn(usize, usize) -> f64, a: &[f64], b: &[f64]| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += a[i] * m(i, j) * b[j];
                }
            }
            s
        };
        let mut out = Angular { w: cub.weights.clone(), s_h: Vec::new(), s_r: Vec::new(), pairs: Vec::new() };
        for om in &cub.points {
            let ho: Vec<f64> = (0..d).map(|i| (0..d).map(|j| h[(i, j)] * om[j]).sum()).collect();
            out.s_h.push(om.iter().zip(&ho).map(|(a, b)| a * b).sum());
            out.s_r.push(bil(&|i, j| jet.rbar_ricci[i][j], om, om));
            if !with_pairs {
                continue;
            }
            let mut rz = vec![vec![0.0; d]; d];
            let mut dz = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        dz[i][j] += jet.dh[i][j][k] * om[k];
                        for l in 0..d {
                            s += jet.rbar[i][k][j][l] * om[k] * om[l];
                        }
                    }
                    rz[i][j] = s;
                }
            }
            let mut p = [0.0; 15];
            for (q, (a, b)) in [(om.as_slice(), om.as_slice()), (om, &ho), (&ho, &ho)].into_iter().enumerate() {
                p[5 * q] = a.iter().zip(b).map(|(x, y)| x * y).sum();
                p[5 * q + 1] = bil(&|i, j| h[(i, j)], a, b);
                p[5 * q + 2] = bil(&|i, j| rz[i][j], a, b);
                p[5 * q + 3] = bil(&|i, j| dz[i][j], a, b);
                p[5 * q + 4] = bil(&|i, j| mm[i][j], a, b);
            }
            out.pairs.push(p);
        }
        Ok(out)
    }
}

/// Quadrature node carrying the full measure weight and the outer end of its panel.
#[derive(Debug, Clone, Copy)]
struct Node {
    r: f64,
    t: f64,
    wt: f64,
    end: f64,
}

fn breaks_with(radii: &[f64]) -> Vec<f64> {
    let top = radii.iter().fold(0.0f64, |a, &b| a.max(b));
    let mut b = geometric_breaks(top);
    b.extend_from_slice(radii);
    b.sort_by(|x, y| x.total_cmp(y));
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * y.abs().max(1.0));
    b
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Interior {
    pub i1p: f64,
    pub i1pp: f64,
    pub i1ppp: f64,
    pub i2: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Boundary {
    /// ½∫(U + δv)²|g|^{1/2} dz, so that I₃ = εδγ · i3_unit
    pub i3_unit: f64,
    pub i4: f64,
    pub i5: f64,
}

pub(crate) struct Engine<'a> {
    n: usize,
    jet: &'a FermiMetricJet,
    radius: f64,
    ang: Angular,
    bang: Angular,
    polar: Vec<Node>,
    bnodes: Vec<Node>,
    vint: Option<Vec<[f64; 3]>>,
    vbnd: Option<Vec<f64>>,
}

impl<'a> Engine<'a> {
    pub fn new(jet: &'a FermiMetricJet, prof: Option<&ReducedProfile>, deltas: &[f64], opts: &ExpansionOptions) -> Result<Self> {
        opts.validate()?;
        let n = jet.n();
        let d = jet.dim();
        let area = sphere_area(d)?;
        let radii: Vec<f64> = deltas.iter().map(|dl| opts.cutoff_radius / dl).collect();
        let breaks = breaks_with(&radii);
        let (gx, gw) = gauss_legendre(opts.panel_nodes);
        let (tx, tw) = gauss_legendre(opts.theta_nodes);
        let q = std::f64::consts::FRAC_PI_4;
        let mut polar = Vec::new();
        let mut bnodes = Vec::new();
        for pan in breaks.windows(2) {
            let (a, b) = (pan[0], pan[1]);
            let (hl, c) = (0.5 * (b - a), 0.5 * (a + b));
            for (x, w) in gx.iter().zip(&gw) {
                let rho = c + hl * x;
                let wr = hl * w;
                bnodes.push(Node { r: rho, t: 0.0, wt: area * rho.powi(d as i32 - 1) * wr, end: b });
                for (y, v) in tx.iter().zip(&tw) {
                    let th = q * (1.0 + y);
                    let (r, t) = (rho * th.cos(), rho * th.sin());
                    polar.push(Node { r, t, wt: area * r.powi(d as i32 - 1) * rho * wr * q * v, end: b });
                }
            }
        }
        let (vint, vbnd) = match prof {
            Some(pf) if !pf.h_ref.is_zero() => {
                let s = pf.spline()?;
                let (rm, tm) = (pf.grid.r_max(), pf.grid.t_max());
                let vi = polar
                    .iter()
                    .map(|nd| {
                        if nd.r < rm && nd.t < tm {
                            let (w, wr, wt) = s.eval_grad(nd.r, nd.t);
                            [w, wr, wt]
                        } else {
                            [0.0; 3]
                        }
                    })
                    .collect();
                let row: Vec<f64> = (0..pf.grid.nr()).map(|i| pf.w_at(i, 0)).collect();
                let bs = CubicSpline::new(&pf.grid.r, &row, EndCondition::Slope(0.0), EndCondition::Natural)?;
                let vb = bnodes.iter().map(|nd| if nd.r < rm { bs.eval(nd.r).0 } else { 0.0 }).collect();
                (Some(vi), Some(vb))
            }
            _ => (None, None),
        };
        Ok(Self {
            n,
            jet,
            radius: opts.cutoff_radius,
            ang: Angular::new(jet, opts.angular_order, true)?,
            bang: Angular::new(jet, opts.boundary_angular_order, false)?,
            polar,
            bnodes,
            vint,
            vbnd,
        })
    }

    fn inside(&self, nd: &Node, delta: f64) -> bool {
        nd.end <= self.radius / delta * (1.0 + 1e-12)
    }

    /// I₁′, I₁″, I₁‴ and I₂ (for constant a) at scale δ.
    pub fn interior(&self, delta: f64, a: f64) -> Interior {
        let nf = self.n as f64;
        let jet = self.jet;
        let dl2 = delta * delta;
        let mut acc = Interior::default();
        for (k, nd) in self.polar.iter().enumerate() {
            if !self.inside(nd, delta) {
                continue;
            }
            let (r, t) = (nd.r, nd.t);
            let dd = (1.0 + t) * (1.0 + t) + r * r;
            let u = dd.powf(-0.5 * (nf - 2.0));
            let dn = dd.powf(-0.5 * nf);
            let (ur, ut) = (-(nf - 2.0) * r * dn, -(nf - 2.0) * (1.0 + t) * dn);
            let (ch, cr, cd, cm) = (2.0 * delta * t, dl2 * r * r / 3.0, 2.0 * dl2 * t * r, dl2 * t * t);
            let g0 = 1.0 - 0.5 * dl2 * (jet.pi_norm_sq + jet.ric) * t * t;
            let cs = dl2 * r * r / 6.0;
            let v = self.vint.as_ref().map(|v| v[k]);
            let mut s = Interior::default();
            for (j, &wj) in self.ang.w.iter().enumerate() {
                let p = &self.ang.pairs[j];
                let sg = g0 - cs * self.ang.s_r[j];
                let goo = p[0] + ch * p[1] + cr * p[2] + cd * p[3] + cm * p[4];
                s.i1p += wj * 0.5 * (ur * ur * goo + ut * ut) * sg;
                match v {
                    None => s.i2 += wj * u * u * sg,
                    Some([w, wr, wt]) => {
                        let sh = self.ang.s_h[j];
                        let goh = p[5] + ch * p[6] + cr * p[7] + cd * p[8] + cm * p[9];
                        let ghh = p[10] + ch * p[11] + cr * p[12] + cd * p[13] + cm * p[14];
                        let (aa, bb, vt) = (wr * r * r * sh, 2.0 * w * r, wt * r * r * sh);
                        s.i1pp += wj * (ur * (aa * goo + bb * goh) + ut * vt) * sg;
                        s.i1ppp += wj * (aa * aa * goo + 2.0 * aa * bb * goh + bb * bb * ghh + vt * vt) * sg;
                        let uv = u + delta * w * r * r * sh;
                        s.i2 += wj * uv * uv * sg;
                    }
                }
            }
            acc.i1p += nd.wt * s.i1p;
            acc.i1pp += nd.wt * s.i1pp;
            acc.i1ppp += nd.wt * s.i1ppp;
            acc.i2 += nd.wt * s.i2;
        }
        acc.i1pp *= delta;
        acc.i1ppp *= 0.5 * dl2;
        acc.i2 *= 0.5 * dl2 * a;
        acc
    }

    pub fn boundary(&self, delta: f64) -> Boundary {
        let nf = self.n as f64;
        let p = 2.0 * (nf - 1.0) / (nf - 2.0);
        let dl2 = delta * delta;
        let mut acc = Boundary::default();
        for (k, nd) in self.bnodes.iter().enumerate() {
            if !self.inside(nd, delta) {
                continue;
            }
            let r = nd.r;
            let u0 = (1.0 + r * r).powf(-0.5 * (nf - 2.0));
            let up = (1.0 + r * r).powf(-(nf - 1.0));
            let w0 = self.vbnd.as_ref().map_or(0.0, |v| v[k]);
            let cs = dl2 * r * r / 6.0;
            let mut s = Boundary::default();
            for (j, &wj) in self.bang.w.iter().enumerate() {
                let sg = 1.0 - cs * self.bang.s_r[j];
                let x = delta * w0 * r * r * self.bang.s_h[j] / u0;
                let uu = u0 * (1.0 + x);
                s.i3_unit += wj * uu * uu * sg;
                s.i5 += wj * up * sg;
                let diff = if x > -1.0 { up * (p * x.ln_1p()).exp_m1() } else { -up };
                s.i4 += wj * diff * sg;
            }
            acc.i3_unit += nd.wt * s.i3_unit;
            acc.i4 += nd.wt * s.i4;
            acc.i5 += nd.wt * s.i5;
        }
        let c = (nf - 2.0) * (nf - 2.0) / (2.0 * (nf - 1.0));
        acc.i3_unit *= 0.5;
        acc.i4 *= -c;
        acc.i5 *= -c;
        acc
    }

    /// The three I₁′ integrals that vanish by symmetry, each normalized by the
    /// same integral with the angular factor replaced by its absolute value
    /// (or by the tensor norm when that factor vanishes pointwise).
    pub fn i1prime_symmetry(&self) -> [f64; 3] {
        let nf = self.n as f64;
        let mut num = [0.0; 3];
        let mut den = [0.0; 3];
        for nd in &self.polar {
            let (r, t) = (nd.r, nd.t);
            let dd = (1.0 + t) * (1.0 + t) + r * r;
            let ur2 = (nf - 2.0) * (nf - 2.0) * r * r * dd.powf(-nf);
            let radial = [t * ur2, t * r * ur2, r * r * ur2];
            let mut m = [0.0; 3];
            let mut ma = [0.0; 3];
            for (j, &wj) in self.ang.w.iter().enumerate() {
                let p = &self.ang.pairs[j];
                for (q, val) in [p[1], p[3], p[2]].into_iter().enumerate() {
                    m[q] += wj * val;
                    ma[q] += wj * val.abs();
                }
            }
            ma[2] = frob4(&self.jet.rbar);
            for q in 0..3 {
                num[q] += nd.wt * radial[q] * m[q];
                den[q] += nd.wt * radial[q] * ma[q];
            }
        }
        std::array::from_fn(|q| if den[q] > 0.0 { num[q] / den[q] } else { 0.0 })
    }

    /// ∫∇U·∇v over the half-space and ∫U^{n/(n−2)} v over the boundary, each relative
    /// to the integral of the absolute value. Zero when no profile is attached.
    pub fn uv_identities(&self) -> (f64, f64) {
        let (Some(vi), Some(vb)) = (&self.vint, &self.vbnd) else {
            return (0.0, 0.0);
        };
        let nf = self.n as f64;
        let (mut a, mut aa) = (0.0, 0.0);
        for (nd, &[w, wr, wt]) in self.polar.iter().zip(vi) {
            let (r, t) = (nd.r, nd.t);
            let dd = (1.0 + t) * (1.0 + t) + r * r;
            let dn = dd.powf(-0.5 * nf);
            let (ur, ut) = (-(nf - 2.0) * r * dn, -(nf - 2.0) * (1.0 + t) * dn);
            for (j, &wj) in self.ang.w.iter().enumerate() {
                let sh = self.ang.s_h[j];
                let f = ur * (wr * r * r * sh + 2.0 * w * r * sh) + ut * wt * r * r * sh;
                a += nd.wt * wj * f;
                aa += nd.wt * wj * f.abs();
            }
        }
        let (mut b, mut bb) = (0.0, 0.0);
        for (nd, &w0) in self.bnodes.iter().zip(vb) {
            let r = nd.r;
            let f = (1.0 + r * r).powf(-0.5 * nf) * w0 * r * r;
            for (j, &wj) in self.bang.w.iter().enumerate() {
                b += nd.wt * wj * f * self.bang.s_h[j];
                bb += nd.wt * wj * (f * self.bang.s_h[j]).abs();
            }
        }
        (if aa > 0.0 { a / aa } else { 0.0 }, if bb > 0.0 { b / bb } else { 0.0 })
    }
}

fn frob4(t: &[Vec<Vec<Vec<f64>>>]) -> f64 {
    t.iter().flatten().flatten().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_math::{appendix_integrals, constant_a, omega_i, TraceFreeForm};

    #[test]
    fn flat_bubble_integrals() {
        let jet = FermiMetricJet::from_h(TraceFreeForm::zeros(6));
        let e = Engine::new(&jet, None, &[1e-4], &ExpansionOptions::default()).unwrap();
        let n = 7.0;
        let wi = omega_i(7);
        let int = e.interior(1e-4, 1.0);
        let b = e.boundary(1e-4);
        assert!((int.i1p - (n - 2.0) * (n - 3.0) / (2.0 * (n - 1.0)) * wi).abs() < 1e-10 * wi);
        assert!((b.i5 + (n - 2.0) * (n - 2.0) * (n - 3.0) / (2.0 * (n - 1.0) * (n - 1.0)) * wi).abs() < 1e-10 * wi);
        assert!((int.i1p + b.i5 - constant_a(7)).abs() < 1e-10 * wi);
        // ½δ²a∫U² and ½∫U(z,0)²
        let i2 = int.i2 / (1e-4 * 1e-4);
        assert!((i2 - (n - 2.0) / ((n - 1.0) * (n - 4.0)) * wi).abs() < 1e-9 * wi);
        assert!((b.i3_unit - (n - 2.0) / (n - 1.0) * wi).abs() < 1e-9 * wi);
        assert_eq!(b.i4, 0.0);
    }

    #[test]
    fn polar_rule_matches_appendix_integrals() {
        let jet = FermiMetricJet::from_h(TraceFreeForm::zeros(6));
        let e = Engine::new(&jet, None, &[1e-5], &ExpansionOptions::default()).unwrap();
        for (name, exact, f) in appendix_integrals(7) {
            let v: f64 = e.polar.iter().map(|nd| nd.wt * f(nd.r, nd.t)).sum();
            assert!(((v - exact) / exact).abs() < 1e-9, "{name}: {v} vs {exact}");
        }
    }
}
