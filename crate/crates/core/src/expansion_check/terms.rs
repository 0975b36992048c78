use super::engine::{Engine, ExpansionOptions};
use super::fit::{check_scales, fit_powers, make_fit, rel_err, FitSpec, TermFit, TermId};
use crate::core_math::{appendix_integrals, omega_i, ProblemParams};
use crate::correction_solver::{correction_scalars, ReducedProfile};
use crate::error::{Error, Result};
use crate::geometry_model::FermiMetricJet;

pub(crate) fn prepare(p: &ProblemParams, jet: &FermiMetricJet, prof: Option<&ReducedProfile>, scales: &[f64]) -> Result<()> {
    p.validate_reduced()?;
    if jet.n() != p.n {
        return Err(Error::Dimension { expected: p.n - 1, got: jet.dim() });
    }
    jet.validate()?;
    check_scales(scales)?;
    if let Some(pf) = prof {
        if pf.n != p.n {
            return Err(Error::Dimension { expected: p.n, got: pf.n });
        }
        let diff = pf.h_ref.max_abs_diff(&jet.h);
        if diff > 1e-12 * jet.h.norm_sq().sqrt().max(1.0) {
            return Err(Error::ProfileMismatch(diff));
        }
    }
    Ok(())
}

fn floor_for(values: &[f64]) -> f64 {
    1e-12 * values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// ½δ²∫a(U + δv)²|g|^{1/2} with constant a; the δ² coefficient is a(n−2)/((n−1)(n−4)) ω I.
pub fn verify_i2(p: &ProblemParams, jet: &FermiMetricJet, prof: Option<&ReducedProfile>, deltas: &[f64], opts: &ExpansionOptions) -> Result<TermFit> {
    prepare(p, jet, prof, deltas)?;
    let nf = p.n as f64;
    let e = Engine::new(jet, prof, deltas, opts)?;
    let values: Vec<f64> = deltas.iter().map(|&d| e.interior(d, jet.a).i2).collect();
    let spec = FitSpec {
        term_id: TermId::I2,
        order: 2.0,
        powers: vec![2.0, 3.0, 4.0],
        predicted_coeff: jet.a * (nf - 2.0) / ((nf - 1.0) * (nf - 4.0)) * omega_i(p.n),
        predicted_constant: None,
        floor: 1e-300,
    };
    make_fit(spec, deltas, values)
}

/// I₃/ε = ½δγ∫(U + δv)²|g|^{1/2} dz on the boundary; the δ coefficient is γB.
pub fn verify_i3(p: &ProblemParams, jet: &FermiMetricJet, prof: Option<&ReducedProfile>, gamma: f64, deltas: &[f64], opts: &ExpansionOptions) -> Result<TermFit> {
    prepare(p, jet, prof, deltas)?;
    if !gamma.is_finite() {
        return Err(Error::InvalidParam("gamma must be finite".into()));
    }
    let nf = p.n as f64;
    let e = Engine::new(jet, prof, deltas, opts)?;
    let values: Vec<f64> = deltas.iter().map(|&d| d * gamma * e.boundary(d).i3_unit).collect();
    let spec = FitSpec {
        term_id: TermId::I3,
        order: 1.0,
        powers: vec![1.0, 2.0, 3.0],
        predicted_coeff: gamma * (nf - 2.0) / (nf - 1.0) * omega_i(p.n),
        predicted_constant: None,
        floor: 1e-300,
    };
    make_fit(spec, deltas, values)
}

/// −(n−2)²/(2(n−1)) ∫U^{2(n−1)/(n−2)}|g|^{1/2} dz: constant term and R̄_ii δ² coefficient.
pub fn verify_i5(p: &ProblemParams, jet: &FermiMetricJet, deltas: &[f64], opts: &ExpansionOptions) -> Result<TermFit> {
    prepare(p, jet, None, deltas)?;
    let nf = p.n as f64;
    let wi = omega_i(p.n);
    let e = Engine::new(jet, None, deltas, opts)?;
    let values: Vec<f64> = deltas.iter().map(|&d| e.boundary(d).i5).collect();
    let spec = FitSpec {
        term_id: TermId::I5,
        order: 2.0,
        powers: vec![0.0, 2.0, 4.0],
        predicted_coeff: (nf - 2.0) * (nf - 2.0) / (12.0 * (nf - 1.0) * (nf - 1.0)) * jet.rbar_trace() * wi,
        predicted_constant: Some(-(nf - 2.0) * (nf - 2.0) * (nf - 3.0) / (2.0 * (nf - 1.0) * (nf - 1.0)) * wi),
        floor: floor_for(&values),
    };
    make_fit(spec, deltas, values)
}

/// δ² coefficient of I₁′ in units of ω I_{n−1}^n.
pub fn i1prime_coefficient(n: usize, jet: &FermiMetricJet) -> f64 {
    let nf = n as f64;
    let (ric, pi, rt) = (jet.ric, jet.pi_norm_sq, jet.rbar_trace());
    (nf - 2.0) / (2.0 * (nf - 1.0) * (nf - 1.0) * (nf - 4.0)) * (ric + 3.0 * pi)
        - (nf - 2.0) / (2.0 * (nf - 1.0) * (nf - 4.0)) * (ric + pi)
        - (nf - 2.0) * (nf - 2.0) / (12.0 * (nf - 1.0) * (nf - 4.0)) * rt
}

/// Same coefficient written with the four half-space integrals before they are
/// expressed through ω I_{n−1}^n.
fn i1prime_coefficient_from_integrals(n: usize, jet: &FermiMetricJet) -> f64 {
    let nf = n as f64;
    let ints = appendix_integrals(n);
    let (zt, t2, z2) = (ints[1].1, ints[2].1, ints[3].1);
    let c = (nf - 2.0) * (nf - 2.0);
    0.5 * c / (nf - 1.0) * (jet.ric + 3.0 * jet.pi_norm_sq) * zt - 0.25 * c * (jet.pi_norm_sq + jet.ric) * t2
        - c / (12.0 * (nf - 1.0)) * jet.rbar_trace() * z2
}

/// ½∫g^{ab}∂_aU∂_bU|g|^{1/2}: constant, δ² coefficient and the three integrals
/// that vanish by symmetry.
pub fn verify_i1prime(p: &ProblemParams, jet: &FermiMetricJet, deltas: &[f64], opts: &ExpansionOptions) -> Result<TermFit> {
    prepare(p, jet, None, deltas)?;
    let nf = p.n as f64;
    let wi = omega_i(p.n);
    let e = Engine::new(jet, None, deltas, opts)?;
    let values: Vec<f64> = deltas.iter().map(|&d| e.interior(d, 0.0).i1p).collect();
    let spec = FitSpec {
        term_id: TermId::I1Prime,
        order: 2.0,
        powers: vec![0.0, 2.0, 3.0],
        predicted_coeff: i1prime_coefficient(p.n, jet) * wi,
        predicted_constant: Some((nf - 2.0) * (nf - 3.0) / (2.0 * (nf - 1.0)) * wi),
        floor: floor_for(&values),
    };
    let mut fit = make_fit(spec, deltas, values)?;
    let [a, b, c] = e.i1prime_symmetry();
    fit.checks.insert("symmetry_h_t".into(), a);
    fit.checks.insert("symmetry_dh_tz".into(), b);
    fit.checks.insert("symmetry_rbar_zz".into(), c);
    fit.checks.insert("coeff_from_integrals".into(), i1prime_coefficient_from_integrals(p.n, jet));
    Ok(fit)
}

/// I₄ by direct boundary quadrature, its vanishing δ term, and the collapse of
/// I₁″ + I₁‴ + I₄ onto ½∫Δv v.
pub fn verify_i4_and_cross(p: &ProblemParams, jet: &FermiMetricJet, prof: &ReducedProfile, deltas: &[f64], opts: &ExpansionOptions) -> Result<TermFit> {
    prepare(p, jet, Some(prof), deltas)?;
    let s = correction_scalars(prof);
    let e = Engine::new(jet, Some(prof), deltas, opts)?;
    let mut i4 = Vec::new();
    let mut cross = Vec::new();
    for &d in deltas {
        let b = e.boundary(d);
        let int = e.interior(d, 0.0);
        i4.push(b.i4);
        cross.push(int.i1pp + int.i1ppp);
    }
    let floor = 1e-300;
    let spec = FitSpec { term_id: TermId::I4, order: 2.0, powers: vec![1.0, 2.0, 3.0], predicted_coeff: -0.5 * s.boundary_quad, predicted_constant: None, floor };
    let mut fit = make_fit(spec, deltas, i4.clone())?;
    let c = fit_powers(deltas, &cross, &[1.0, 2.0, 3.0])?;
    let total: Vec<f64> = i4.iter().zip(&cross).map(|(a, b)| a + b).collect();
    let ct = fit_powers(deltas, &total, &[1.0, 2.0, 3.0])?;
    let predicted_cross = s.cross_term + 0.5 * s.dirichlet;
    let lin = fit.checks["coeff_pow_1"];
    let (guv, uv) = e.uv_identities();
    for (k, v) in [
        ("linear_coeff", lin),
        ("linear_over_quadratic", if fit.fitted_coeff != 0.0 { (lin / fit.fitted_coeff).abs() } else { lin.abs() }),
        ("i1pp_i1ppp_fitted", c[1]),
        ("i1pp_i1ppp_predicted", predicted_cross),
        ("i1pp_i1ppp_rel_err", rel_err(c[1], predicted_cross)),
        ("i1pp_i1ppp_linear_coeff", c[0]),
        ("collapse_fitted", ct[1]),
        ("collapse_predicted", 0.5 * s.delta_v_v),
        ("collapse_rel_err", rel_err(ct[1], 0.5 * s.delta_v_v)),
        ("grad_u_grad_v", guv),
        ("u_pow_v_boundary", uv),
    ] {
        fit.checks.insert(k.into(), v);
    }
    Ok(fit)
}
