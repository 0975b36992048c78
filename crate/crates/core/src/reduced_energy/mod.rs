//! φ(q), the reduced functional G(λ,q) = λBγ(q) + λ²φ(q) and its critical points.

pub mod critical;

pub use critical::{find_critical, g_eval, Classification, CriticalOptions, CriticalPointReport, PointRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core_math::{constants_ab, omega_i, ProblemParams, TraceFreeForm};
use crate::correction_solver::{correction_scalars, solve_reduced_bvp, CorrectionScalars, ProfileIntegrals, ReducedProfile};
use crate::error::{Error, Result};
use crate::geometry_model::{BoundaryField, FermiMetricJet};

/// A, B and φ at each boundary point, with the provenance of the correction solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoefficients {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub phi: Vec<f64>,
    pub provenance: Option<serde_json::Value>,
}

impl ReducedCoefficients {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        Self { n, a, b, phi: Vec::new(), provenance: None }
    }
}

/// c(n) = (n-6)(n-2) ω_{n-1} I_{n-1}^n / (4 (n-1)² (n-4)).
pub fn phi_constant(n: usize) -> f64 {
    let nf = n as f64;
    (nf - 6.0) * (nf - 2.0) * omega_i(n) / (4.0 * (nf - 1.0) * (nf - 1.0) * (nf - 4.0))
}

/// φ = ½ ∫Δv v − c(n)‖π‖².
pub fn phi_of_q(p: &ProblemParams, jet: &FermiMetricJet, prof: &ReducedProfile) -> Result<f64> {
    p.validate_reduced()?;
    if prof.n != p.n || jet.n() != p.n {
        return Err(Error::Dimension { expected: p.n, got: jet.n() });
    }
    let diff = prof.h_ref.max_abs_diff(&jet.h);
    if diff > 1e-12 * jet.h.norm_sq().sqrt().max(1.0) {
        return Err(Error::ProfileMismatch(diff));
    }
    Ok(phi_from(p.n, jet, &correction_scalars(prof)))
}

fn phi_from(n: usize, jet: &FermiMetricJet, s: &CorrectionScalars) -> f64 {
    0.5 * s.delta_v_v - phi_constant(n) * jet.pi_norm_sq
}

/// Residual of the collapse of the I₂ and I₁′ curvature terms onto the ‖π‖²-only
/// coefficient of φ, in units of ω_{n-1} I_{n-1}^n.
pub fn curvature_cancellation_check(p: &ProblemParams, jet: &FermiMetricJet) -> Result<f64> {
    p.validate_reduced()?;
    let nf = p.n as f64;
    let (ric, pi, rt) = (jet.ric, jet.pi_norm_sq, jet.rbar_trace());
    let den = 4.0 * (nf - 1.0) * (nf - 1.0) * (nf - 4.0);
    let r = jet.a * (nf - 2.0) / ((nf - 1.0) * (nf - 4.0))
        - (nf - 2.0) * (nf - 2.0) / den * (2.0 * ric + 2.0 * (nf - 4.0) / (nf - 2.0) * pi + rt)
        + (nf - 6.0) * (nf - 2.0) / den * pi;
    Ok(r.abs())
}

/// One solve and one set of grid integrals serve every point: w does not depend on h.
pub fn reduced_coefficients(p: &ProblemParams, field: &BoundaryField, prof: &ReducedProfile) -> Result<ReducedCoefficients> {
    if field.n != p.n {
        return Err(Error::Dimension { expected: p.n, got: field.n });
    }
    p.validate_reduced()?;
    if prof.n != p.n {
        return Err(Error::Dimension { expected: p.n, got: prof.n });
    }
    let mut c = constants_ab(p)?;
    let ints = ProfileIntegrals::of(prof);
    c.phi = field
        .points
        .iter()
        .map(|pt| {
            let h = &pt.jet.h;
            if h.dim() != prof.h_ref.dim() {
                return Err(Error::Dimension { expected: prof.h_ref.dim(), got: h.dim() });
            }
            if prof.h_ref.is_zero() && !h.is_zero() {
                return Err(Error::ProfileMismatch(h.norm_sq().sqrt()));
            }
            Ok(phi_from(p.n, &pt.jet, &ints.scalars(h)))
        })
        .collect::<Result<_>>()?;
    c.provenance = Some(serde_json::json!({
        "n_r": prof.grid.nr(),
        "n_t": prof.grid.nt(),
        "r_max": prof.grid.r_max(),
        "t_max": prof.grid.t_max(),
        "spacing": prof.grid.spacing,
        "solver_tol": p.solver_tol,
        "iterations": prof.solve.iterations,
        "residual": prof.solve.residual,
    }));
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub sample: usize,
    pub h_norm_sq: f64,
    pub phi: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureScan {
    pub rows: Vec<ScanRow>,
    pub mean_ratio: f64,
    pub max_rel_dev: f64,
    pub resolved: bool,
}

/// φ/‖h‖² over seeded random forms. With `resolve` every form gets its own
/// solve; otherwise one profile is solved and rebound.
pub fn conjecture_scan(p: &ProblemParams, samples: usize, seed: u64, resolve: bool) -> Result<ConjectureScan> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    p.validate_reduced()?;
    if samples < 2 {
        return Err(Error::InvalidParam("conjecture scan needs at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forms: Vec<TraceFreeForm> = (0..samples)
        .map(|_| {
            let norm = rng.random_range(0.2..2.0);
            TraceFreeForm::random(p.d(), norm, &mut rng)
        })
        .collect();
    let shared = if resolve { None } else { Some(solve_reduced_bvp(p, &forms[0])?) };
    let rows: Vec<ScanRow> = forms
        .par_iter()
        .enumerate()
        .map(|(k, h)| {
            let prof = match &shared {
                Some(s) => s.rebind(h),
                None => solve_reduced_bvp(p, h),
            }
            .map_err(|e| Error::InvalidParam(format!("sample {k}: {e}")))?;
            let phi = phi_of_q(p, &FermiMetricJet::from_h(h.clone()), &prof)?;
            Ok(ScanRow { sample: k, h_norm_sq: h.norm_sq(), phi, ratio: phi / h.norm_sq() })
        })
        .collect::<Result<_>>()?;
    let mean_ratio = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
    let max_rel_dev = rows.iter().map(|r| ((r.ratio - mean_ratio) / mean_ratio).abs()).fold(0.0, f64::max);
    Ok(ConjectureScan { rows, mean_ratio, max_rel_dev, resolved: resolve })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use num_rational::Ratio;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small() -> ProblemParams {
        let mut p = ProblemParams::with_n(7);
        p.r_max = 40.0;
        p.t_max = 40.0;
        p.n_r = 121;
        p.n_t = 121;
        p
    }

    #[test]
    fn phi_examples() {
        let p = small();
        let zero = TraceFreeForm::zeros(6);
        let prof0 = solve_reduced_bvp(&p, &zero).unwrap();
        assert_eq!(phi_of_q(&p, &FermiMetricJet::from_h(zero), &prof0).unwrap(), 0.0);
        let h = TraceFreeForm::diag_pair(6, 0.8);
        let prof = solve_reduced_bvp(&p, &h).unwrap();
        let jet = FermiMetricJet::from_h(h.clone());
        let phi = phi_of_q(&p, &jet, &prof).unwrap();
        assert!(phi < 0.0);
        let phi3 = phi_of_q(&p, &FermiMetricJet::from_h(h.scaled(3.0)), &prof.rebind(&h.scaled(3.0)).unwrap()).unwrap();
        assert!((phi3 - 9.0 * phi).abs() < 1e-12 * phi.abs());
        let other = FermiMetricJet::from_h(TraceFreeForm::diag_pair(6, 0.5));
        assert!(matches!(phi_of_q(&p, &other, &prof), Err(Error::ProfileMismatch(_))));
    }

    fn cancellation_exact(n: i64, a: Ratio<i64>, ric: Ratio<i64>, pi: Ratio<i64>, rt: Ratio<i64>) -> Ratio<i64> {
        let r = |x: i64| Ratio::from_integer(x);
        let den = r(4 * (n - 1) * (n - 1) * (n - 4));
        a * r(n - 2) / r((n - 1) * (n - 4)) - r((n - 2) * (n - 2)) / den * (r(2) * ric + r(2 * (n - 4)) / r(n - 2) * pi + rt)
            + r((n - 6) * (n - 2)) / den * pi
    }

    #[test]
    fn curvature_cancellation() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let jet = FermiMetricJet::random(6, rng.random_range(0.1..2.0), &mut rng);
            assert!(curvature_cancellation_check(&ProblemParams::with_n(7), &jet).unwrap() < 1e-12);
        }
        assert_eq!(curvature_cancellation_check(&ProblemParams::with_n(7), &FermiMetricJet::from_h(TraceFreeForm::zeros(6))).unwrap(), 0.0);
        assert!(curvature_cancellation_check(&ProblemParams::with_n(6), &FermiMetricJet::from_h(TraceFreeForm::zeros(5))).is_err());
        // exact rational oracle with a consistent a
        for n in 7..=12i64 {
            for (ric, pi, rt) in [(1, 3, 2), (-5, 7, 11), (13, 1, -4)] {
                let (ric, pi, rt) = (Ratio::from_integer(ric), Ratio::from_integer(pi), Ratio::from_integer(rt));
                let a = Ratio::new(n - 2, 4 * (n - 1)) * (Ratio::from_integer(2) * ric + rt + pi);
                assert_eq!(cancellation_exact(n, a, ric, pi, rt), Ratio::from_integer(0));
            }
        }
    }

    #[test]
    fn scan_rebind_is_constant() {
        let s = conjecture_scan(&small(), 5, 3, false).unwrap();
        assert!(s.max_rel_dev < 1e-12);
        assert!(s.mean_ratio < 0.0);
        let s2 = conjecture_scan(&small(), 2, 3, true).unwrap();
        assert!((s2.mean_ratio - s.mean_ratio).abs() < 1e-9 * s.mean_ratio.abs());
    }

    #[test]
    fn field_coefficients_match_pointwise_phi() {
        use crate::geometry_model::sinusoidal_pi_field;
        let p = small();
        let prof = solve_reduced_bvp(&p, &TraceFreeForm::diag_pair(6, 1.0)).unwrap();
        let field = sinusoidal_pi_field(7, &[5], 1.0, 0.5).unwrap();
        let c = reduced_coefficients(&p, &field, &prof).unwrap();
        for (pt, &phi) in field.points.iter().zip(&c.phi) {
            assert_eq!(phi, phi_of_q(&p, &pt.jet, &prof.rebind(&pt.jet.h).unwrap()).unwrap());
        }
        let zero = solve_reduced_bvp(&p, &TraceFreeForm::zeros(6)).unwrap();
        assert!(matches!(reduced_coefficients(&p, &field, &zero), Err(Error::ProfileMismatch(_))));
    }

    #[test]
    fn phi_constant_n7() {
        let expect = 1.0 * 5.0 / (4.0 * 36.0 * 3.0) * omega_i(7);
        assert!((phi_constant(7) - expect).abs() < 1e-15);
        assert_eq!(phi_constant(6), 0.0);
    }
}
