//! Invariants of the public pipeline that hold for any trace-free form.

use std::sync::OnceLock;

use boundary_bubble::core_math::{quartic_moment_constant, random_rotation, SphereCubature};
use boundary_bubble::correction_solver::{correction_scalars, solve_reduced_bvp, ProfileIntegrals, ReducedProfile};
use boundary_bubble::geometry_model::{sinusoidal_pi_field, BoundaryField, FermiMetricJet};
use boundary_bubble::reduced_energy::{find_critical, phi_of_q, reduced_coefficients, CriticalOptions};
use boundary_bubble::{ProblemParams, TraceFreeForm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> ProblemParams {
    let mut p = ProblemParams::with_n(7).with_grid(97, 97);
    p.r_max = 30.0;
    p.t_max = 30.0;
    p
}

fn profile() -> &'static ReducedProfile {
    static P: OnceLock<ReducedProfile> = OnceLock::new();
    P.get_or_init(|| solve_reduced_bvp(&params(), &TraceFreeForm::diag_pair(6, 1.0)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phi_is_rotation_invariant_and_quadratic(seed in 0u64..1000, norm in 0.05f64..3.0) {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = TraceFreeForm::random(6, norm, &mut rng);
        let q = random_rotation(6, &mut rng);
        let hq = h.conjugate(&q).unwrap();
        let phi = phi_of_q(&p, &FermiMetricJet::from_h(h.clone()), &profile().rebind(&h).unwrap()).unwrap();
        let phiq = phi_of_q(&p, &FermiMetricJet::from_h(hq.clone()), &profile().rebind(&hq).unwrap()).unwrap();
        prop_assert!(phi < 0.0);
        prop_assert!((phi - phiq).abs() <= 1e-12 * phi.abs());
        let unit = phi_of_q(&p, &FermiMetricJet::from_h(TraceFreeForm::diag_pair(6, 1.0)), profile()).unwrap() / 2.0;
        prop_assert!((phi / h.norm_sq() - unit).abs() <= 1e-12 * unit.abs());
    }

    #[test]
    fn quartic_moment_matches_cubature(seed in 0u64..1000) {
        let h = TraceFreeForm::random(6, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let rule = SphereCubature::new(6, 4).unwrap();
        let mean = rule.mean(|w| h.quad(w).powi(2));
        let area = boundary_bubble::core_math::sphere_area(6).unwrap();
        let m = quartic_moment_constant(&ProblemParams::with_n(7), &h).unwrap();
        prop_assert!((mean * area - m).abs() <= 1e-12 * m);
    }
}

#[test]
fn scalars_are_the_integrals_times_the_moment() {
    let ints = ProfileIntegrals::of(profile());
    assert_eq!(ints.scalars(&profile().h_ref), correction_scalars(profile()));
    let h = TraceFreeForm::diag_pair(6, 0.25);
    let s = ints.scalars(&h);
    assert_eq!(s.h_norm_sq, h.norm_sq());
    assert!((s.delta_v_v * 16.0 - correction_scalars(profile()).delta_v_v).abs() < 1e-14);
}

#[test]
fn field_json_survives_the_critical_search() {
    let p = params();
    let field = sinusoidal_pi_field(7, &[6, 4], 1.5, 0.3).unwrap();
    let back = BoundaryField::from_json(&field.to_json().unwrap()).unwrap();
    let a = find_critical(&reduced_coefficients(&p, &field, profile()).unwrap(), &field, CriticalOptions::default()).unwrap();
    let b = find_critical(&reduced_coefficients(&p, &back, profile()).unwrap(), &back, CriticalOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.q0, 0);
}
