//! Bubble calculus: the bubble and its Jacobi fields, the integrals I_m^α,
//! sphere areas, angular moments and the constants A and B.

pub mod bubble;
pub mod forms;
pub mod integrals;
pub mod params;
pub mod sphere;

pub use bubble::{bubble_eval, jacobi_field, BubbleValue};
pub use forms::{random_rotation, TraceFreeForm};
pub use integrals::{beta_integral_t, integral_i};
pub use params::{HalfSpacePoint, ProblemParams};
pub use sphere::{omega, quartic_moment_constant, sphere_area, SphereCubature};

use crate::error::Result;
use crate::reduced_energy::ReducedCoefficients;

/// ω_{n-1} I_{n-1}^n, the unit in which every reduced constant is expressed.
pub fn omega_i(n: usize) -> f64 {
    let nf = n as f64;
    omega(n) * integral_i(nf - 1.0, nf).expect("convergent for n >= 3")
}

pub fn constant_b(n: usize) -> f64 {
    let nf = n as f64;
    (nf - 2.0) / (nf - 1.0) * omega_i(n)
}

pub fn constant_a(n: usize) -> f64 {
    let nf = n as f64;
    (nf - 2.0) * (nf - 3.0) / (2.0 * (nf - 1.0) * (nf - 1.0)) * omega_i(n)
}

/// A and B only; φ is filled in by the reduced-energy module.
/// For n = 3 the integral I_2^3 diverges and the constants do not exist.
pub fn constants_ab(p: &ProblemParams) -> Result<ReducedCoefficients> {
    p.validate()?;
    let nf = p.n as f64;
    integral_i(nf - 1.0, nf)?;
    Ok(ReducedCoefficients::new(p.n, constant_a(p.n), constant_b(p.n)))
}

/// ∫_{R^n_+} F(|z|, t) dz dt for radial F, by nested adaptive quadrature.
pub fn half_space_radial_integral<F: Fn(f64, f64) -> f64>(n: usize, f: F, rel_tol: f64) -> Result<f64> {
    use crate::quadrature::{half_line, QuadOpts};
    let d = n as i32 - 1;
    let inner_tol = rel_tol * 0.1;
    let outer = |t: f64| {
        half_line(|r| r.powi(d - 1) * f(r, t), QuadOpts::rel(inner_tol))
            .map(|x| x.0)
            .unwrap_or(f64::NAN)
    };
    let (v, _) = half_line(outer, QuadOpts::rel(rel_tol))?;
    Ok(v * omega(n))
}

/// The four half-space integrals with closed forms, as (closed form, integrand) pairs.
pub fn appendix_integrals(n: usize) -> Vec<(&'static str, f64, Box<dyn Fn(f64, f64) -> f64>)> {
    let nf = n as f64;
    let w = omega(n);
    let i = |m: f64, a: f64| integral_i(m, a).expect("convergent");
    let dd = move |r: f64, t: f64| (1.0 + t) * (1.0 + t) + r * r;
    let c3 = (nf - 2.0) * (nf - 3.0) * (nf - 4.0);
    vec![
        (
            "1/D^(n-1)",
            w * i(nf - 1.0, nf - 2.0) / (nf - 2.0),
            Box::new(move |r, t| dd(r, t).powf(-(nf - 1.0))),
        ),
        (
            "|z|^2 t^2/D^n",
            2.0 * w * i(nf, nf) / c3,
            Box::new(move |r, t| r * r * t * t * dd(r, t).powf(-nf)),
        ),
        (
            "t^2/D^(n-1)",
            2.0 * w * i(nf - 1.0, nf - 2.0) / c3,
            Box::new(move |r, t| t * t * dd(r, t).powf(-(nf - 1.0))),
        ),
        (
            "|z|^2/D^(n-1)",
            w * i(nf - 1.0, nf) / (nf - 4.0),
            Box::new(move |r, t| r * r * dd(r, t).powf(-(nf - 1.0))),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constants_for_n7() {
        let c = constants_ab(&ProblemParams::with_n(7)).unwrap();
        assert!((c.b - PI.powi(3) / 48.0).abs() < 1e-13);
        assert!((c.a - PI.powi(3) / 144.0).abs() < 1e-13);
        assert!((c.b - 0.645964).abs() < 1e-6);
        assert!(constants_ab(&ProblemParams::with_n(3)).is_err());
        for n in 4..=14 {
            let c = constants_ab(&ProblemParams::with_n(n)).unwrap();
            let nf = n as f64;
            assert!(c.a > 0.0 && c.b > 0.0);
            assert!((c.a / c.b - (nf - 3.0) / (2.0 * (nf - 1.0))).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_normalization_of_omega() {
        // ∫_{R^{n-1}} U(z,0)^{2(n-1)/(n-2)} dz = ω_{n-1} I_{n-1}^{n-2}
        use crate::quadrature::{half_line, QuadOpts};
        let n = 7;
        let (v, _) = half_line(|r: f64| r.powi(5) * (1.0 + r * r).powi(-6), QuadOpts::rel(1e-13)).unwrap();
        let lhs = v * omega(n);
        let rhs = omega(n) * integral_i(6.0, 5.0).unwrap();
        assert!((lhs - rhs).abs() < 1e-8 * rhs);
    }

    #[test]
    fn u_squared_integral() {
        // ∫ U^2 = 2(n-2)/((n-4)(n-1)) ω I_{n-1}^n
        let n = 7;
        let v = half_space_radial_integral(n, |r, t| ((1.0 + t).powi(2) + r * r).powi(-5), 1e-11).unwrap();
        let e = 2.0 * 5.0 / (3.0 * 6.0) * omega_i(n);
        assert!((v - e).abs() < 1e-8 * e);
    }
}
