use serde::{Deserialize, Serialize};

use super::engine::ExpansionOptions;
use super::fit::{make_fit, FitSpec, TermFit, TermId};
use super::terms::prepare;
use crate::core_math::{sphere_area, ProblemParams};
use crate::error::{Error, Result};
use crate::geometry_model::FermiMetricJet;
use crate::quadrature::{composite_rule, geometric_breaks, half_line, QuadOpts};

/// Radial cutoff χ(|x|) with support in |x| ≤ 2R.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cutoff {
    /// χ = 1 on |x| ≤ R, C² quintic step down to 0 at 2R.
    Flat,
    /// χ = cos²(π|x|/(4R)); no flat top.
    Bump,
}

impl Cutoff {
    pub fn eval(&self, s: f64, radius: f64) -> f64 {
        let x = s / radius;
        match self {
            Cutoff::Flat if x <= 1.0 => 1.0,
            Cutoff::Flat if x >= 2.0 => 0.0,
            Cutoff::Flat => {
                let u = x - 1.0;
                1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
            }
            Cutoff::Bump if x >= 2.0 => 0.0,
            Cutoff::Bump => (std::f64::consts::FRAC_PI_4 * x).cos().powi(2),
        }
    }
}

/// ‖(n−2)W^{n/(n−2)} − ∂_νW‖ in L^{2(n−1)/n} of the boundary, in blown-up coordinates.
fn mismatch_norm(n: usize, rbar_trace: f64, cutoff: Cutoff, radius: f64, delta: f64, panel_nodes: usize) -> Result<f64> {
    let nf = n as f64;
    let d = n - 1;
    let q = 2.0 * (nf - 1.0) / nf;
    let pp = nf / (nf - 2.0);
    let lo = match cutoff {
        Cutoff::Flat => radius / delta,
        Cutoff::Bump => 0.0,
    };
    let hi = 2.0 * radius / delta;
    let breaks: Vec<f64> = match cutoff {
        Cutoff::Flat => (0..=16).map(|k| lo + (hi - lo) * k as f64 / 16.0).collect(),
        Cutoff::Bump => geometric_breaks(hi),
    };
    let mut s = 0.0;
    for (r, w) in composite_rule(&breaks, panel_nodes) {
        let chi = cutoff.eval(delta * r, radius);
        let f = (nf - 2.0) * (1.0 + r * r).powf(-0.5 * nf) * (chi.powf(pp) - chi);
        let sg = 1.0 - delta * delta * r * r * rbar_trace / (6.0 * d as f64);
        s += w * r.powi(d as i32 - 1) * sg * f.abs().powf(q);
    }
    let v = (sphere_area(d)? * s).powf(1.0 / q);
    if !v.is_finite() {
        return Err(Error::Quadrature("mismatch norm is not finite".into()));
    }
    Ok(v)
}

/// Leading order in ε and its coefficient for the mismatch norm at δ = λε.
fn asymptotics(n: usize, cutoff: Cutoff, radius: f64, lambda: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    let d = n - 1;
    let q = 2.0 * (nf - 1.0) / nf;
    let area = sphere_area(d)?;
    match cutoff {
        Cutoff::Bump => {
            // χ ≈ 1 − κ|x|² near the origin, so the bracket is −2κδ²|z|²U^{n/(n−2)}
            let kappa = (std::f64::consts::PI / (4.0 * radius)).powi(2);
            let (k, _) = half_line(|r| r.powf(d as f64 - 1.0 + 2.0 * q) * (1.0 + r * r).powf(-0.5 * nf * q), QuadOpts::rel(1e-12))?;
            Ok((2.0, 2.0 * kappa * lambda * lambda * (area * k).powf(1.0 / q)))
        }
        Cutoff::Flat => {
            // U^{n/(n−2)} ≈ |z|^{−n} on the transition annulus
            let pp = nf / (nf - 2.0);
            let breaks: Vec<f64> = (0..=16).map(|k| radius * (1.0 + k as f64 / 16.0)).collect();
            let s: f64 = composite_rule(&breaks, 16)
                .into_iter()
                .map(|(x, w)| {
                    let chi = cutoff.eval(x, radius);
                    w * x.powf(d as f64 - 1.0 - nf * q) * (chi.powf(pp) - chi).abs().powf(q)
                })
                .sum();
            Ok((0.5 * nf, (nf - 2.0) * (area * s).powf(1.0 / q) * lambda.powf(0.5 * nf)))
        }
    }
}

/// Boundary-mismatch norm at δ = λε for each ε, fitted by c ε^k with k the
/// leading order of the chosen cutoff.
pub fn remainder_scaling(
    p: &ProblemParams,
    jet: &FermiMetricJet,
    eps: &[f64],
    lambda: f64,
    cutoff: Cutoff,
    opts: &ExpansionOptions,
) -> Result<TermFit> {
    prepare(p, jet, None, eps)?;
    opts.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParam(format!("lambda must be positive, got {lambda}")));
    }
    let rt = jet.rbar_trace();
    let values = eps
        .iter()
        .map(|&e| mismatch_norm(p.n, rt, cutoff, opts.cutoff_radius, lambda * e, opts.panel_nodes))
        .collect::<Result<Vec<f64>>>()?;
    let (order, coeff) = asymptotics(p.n, cutoff, opts.cutoff_radius, lambda)?;
    let spec = FitSpec {
        term_id: TermId::Remainder,
        order,
        powers: vec![order],
        predicted_coeff: coeff,
        predicted_constant: None,
        floor: 1e-300,
    };
    let mut fit = make_fit(spec, eps, values)?;
    fit.checks.insert("lambda".into(), lambda);
    fit.checks.insert("claimed_order".into(), 2.0);
    Ok(fit)
}
