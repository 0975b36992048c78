use serde::{Deserialize, Serialize};

use super::engine::{Engine, ExpansionOptions};
use super::fit::{check_scales, fit_powers, make_fit, rel_err, FitSpec, TermFit, TermId};
use super::terms::prepare;
use crate::core_math::{constant_a, constant_b, ProblemParams};
use crate::correction_solver::ReducedProfile;
use crate::error::{Error, Result};
use crate::geometry_model::BoundaryPoint;
use crate::reduced_energy::phi_of_q;

/// I₁ + … + I₅ at scale δ = λε.
fn total(e: &Engine, a: f64, gamma: f64, lambda: f64, eps: f64) -> f64 {
    let d = lambda * eps;
    let int = e.interior(d, a);
    let b = e.boundary(d);
    int.i1p + int.i1pp + int.i1ppp + int.i2 + eps * d * gamma * b.i3_unit + b.i4 + b.i5
}

/// Model powers in ε; the ε⁴ column is added once there are enough scales to carry it.
fn powers_for(eps: &[f64]) -> Vec<f64> {
    if eps.len() >= 4 {
        vec![0.0, 2.0, 3.0, 4.0]
    } else {
        vec![0.0, 2.0, 3.0]
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParam(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Sum of all terms at δ = λε against A + ε²(λBγ + λ²φ).
pub fn combined_expansion_fit(
    p: &ProblemParams,
    point: &BoundaryPoint,
    prof: &ReducedProfile,
    lambda: f64,
    eps: &[f64],
    opts: &ExpansionOptions,
) -> Result<TermFit> {
    check_lambda(lambda)?;
    let jet = &point.jet;
    prepare(p, jet, Some(prof), eps)?;
    let phi = phi_of_q(p, jet, prof)?;
    let deltas: Vec<f64> = eps.iter().map(|e| lambda * e).collect();
    let e = Engine::new(jet, Some(prof), &deltas, opts)?;
    let values: Vec<f64> = eps.iter().map(|&x| total(&e, jet.a, point.gamma, lambda, x)).collect();
    let a = constant_a(p.n);
    let spec = FitSpec {
        term_id: TermId::Combined,
        order: 2.0,
        powers: powers_for(eps),
        predicted_coeff: lambda * constant_b(p.n) * point.gamma + lambda * lambda * phi,
        predicted_constant: Some(a),
        floor: 1e-12 * a,
    };
    let mut fit = make_fit(spec, eps, values)?;
    fit.checks.insert("lambda".into(), lambda);
    fit.checks.insert("phi".into(), phi);
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaParabola {
    pub lambdas: Vec<f64>,
    /// fitted ε² coefficient at each λ
    pub coeffs: Vec<f64>,
    pub linear: f64,
    pub quadratic: f64,
    pub predicted_linear: f64,
    pub predicted_quadratic: f64,
    pub rel_err_linear: f64,
    pub rel_err_quadratic: f64,
}

/// The ε² coefficient as a function of λ, fitted by αλ + βλ²; α should be Bγ and β should be φ.
pub fn lambda_parabola(
    p: &ProblemParams,
    point: &BoundaryPoint,
    prof: &ReducedProfile,
    lambdas: &[f64],
    eps: &[f64],
    opts: &ExpansionOptions,
) -> Result<LambdaParabola> {
    if lambdas.len() < 3 {
        return Err(Error::InvalidParam("need at least 3 values of lambda".into()));
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    let jet = &point.jet;
    prepare(p, jet, Some(prof), eps)?;
    check_scales(eps)?;
    let phi = phi_of_q(p, jet, prof)?;
    let deltas: Vec<f64> = lambdas.iter().flat_map(|l| eps.iter().map(move |e| l * e)).collect();
    let mut uniq = deltas.clone();
    uniq.sort_by(|a, b| b.total_cmp(a));
    uniq.dedup();
    let e = Engine::new(jet, Some(prof), &uniq, opts)?;
    let mut coeffs = Vec::new();
    for &l in lambdas {
        let y: Vec<f64> = eps.iter().map(|&x| total(&e, jet.a, point.gamma, l, x)).collect();
        coeffs.push(fit_powers(eps, &y, &powers_for(eps))?[1]);
    }
    let c = fit_powers(lambdas, &coeffs, &[1.0, 2.0])?;
    let pl = constant_b(p.n) * point.gamma;
    Ok(LambdaParabola {
        lambdas: lambdas.to_vec(),
        coeffs,
        linear: c[0],
        quadratic: c[1],
        predicted_linear: pl,
        predicted_quadratic: phi,
        rel_err_linear: rel_err(c[0], pl),
        rel_err_quadratic: rel_err(c[1], phi),
    })
}
