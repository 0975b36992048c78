//! The standard bubble U(z,t) = ((1+t)^2 + |z|^2)^{-(n-2)/2} on the upper
//! half-space and the Jacobi fields spanning the kernel of its linearization.

use super::params::{HalfSpacePoint, ProblemParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BubbleValue {
    pub u: f64,
    /// ∂_z U components followed by ∂_t U.
    pub grad: Vec<f64>,
}

#[inline]
pub fn denom(r2: f64, t: f64) -> f64 {
    (1.0 + t) * (1.0 + t) + r2
}

/// U as a function of |z|^2 and t.
#[inline]
pub fn bubble_radial(n: usize, r2: f64, t: f64) -> f64 {
    denom(r2, t).powf(-0.5 * (n as f64 - 2.0))
}

pub fn bubble_eval(p: &ProblemParams, y: &HalfSpacePoint) -> Result<BubbleValue> {
    if y.t < 0.0 {
        return Err(Error::NegativeT(y.t));
    }
    if y.z.len() != p.d() {
        return Err(Error::Dimension { expected: p.d(), got: y.z.len() });
    }
    let nf = p.n as f64;
    let dd = denom(y.z_norm_sq(), y.t);
    let u = dd.powf(-0.5 * (nf - 2.0));
    let g = -(nf - 2.0) * dd.powf(-0.5 * nf);
    let mut grad: Vec<f64> = y.z.iter().map(|zi| g * zi).collect();
    grad.push(g * (1.0 + y.t));
    Ok(BubbleValue { u, grad })
}

/// Jacobi field j_b, b in 1..=n: translations for b < n, dilation for b = n.
pub fn jacobi_field(p: &ProblemParams, b: usize, y: &HalfSpacePoint) -> Result<f64> {
    Ok(jacobi_with_dt(p, b, y)?.0)
}

/// (j_b, ∂_t j_b) from the closed forms.
pub fn jacobi_with_dt(p: &ProblemParams, b: usize, y: &HalfSpacePoint) -> Result<(f64, f64)> {
    let n = p.n;
    if b == 0 || b > n {
        return Err(Error::IndexOutOfRange { index: b, max: n });
    }
    if y.t < 0.0 {
        return Err(Error::NegativeT(y.t));
    }
    if y.z.len() != n - 1 {
        return Err(Error::Dimension { expected: n - 1, got: y.z.len() });
    }
    let nf = n as f64;
    let t = y.t;
    let r2 = y.z_norm_sq();
    let dd = denom(r2, t);
    let dn = dd.powf(-0.5 * nf);
    let dn2 = dn / dd;
    if b < n {
        let zi = y.z[b - 1];
        let j = -(nf - 2.0) * zi * dn;
        let jt = nf * (nf - 2.0) * zi * (1.0 + t) * dn2;
        Ok((j, jt))
    } else {
        let q = 1.0 - t * t - r2;
        let c = 0.5 * (nf - 2.0);
        let j = c * dn * q;
        let jt = c * (-2.0 * t * dn - nf * (1.0 + t) * dn2 * q);
        Ok((j, jt))
    }
}

/// ∂_t j_b + n U^{2/(n-2)} j_b at the boundary point (z, 0).
pub fn linearized_robin_residual(p: &ProblemParams, b: usize, z: &[f64]) -> Result<f64> {
    let y = HalfSpacePoint::new(z.to_vec(), 0.0)?;
    let (j, jt) = jacobi_with_dt(p, b, &y)?;
    let u = bubble_radial(p.n, y.z_norm_sq(), 0.0);
    Ok(jt + p.n as f64 * u.powf(2.0 / (p.n as f64 - 2.0)) * j)
}

/// ∂_t U + (n-2) U^{n/(n-2)} at (z, 0).
pub fn boundary_identity_residual(p: &ProblemParams, z: &[f64]) -> Result<f64> {
    let y = HalfSpacePoint::new(z.to_vec(), 0.0)?;
    let b = bubble_eval(p, &y)?;
    let nf = p.n as f64;
    Ok(b.grad[p.n - 1] + (nf - 2.0) * b.u.powf(nf / (nf - 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p7() -> ProblemParams {
        ProblemParams::with_n(7)
    }

    #[test]
    fn bubble_values() {
        let p = p7();
        let b = bubble_eval(&p, &HalfSpacePoint::origin(6)).unwrap();
        assert_eq!(b.u, 1.0);
        let y = HalfSpacePoint::new(vec![0.0; 6], 1.0).unwrap();
        assert!((bubble_eval(&p, &y).unwrap().u - 0.03125).abs() < 1e-16);
        assert!(HalfSpacePoint::new(vec![0.0; 6], -0.1).is_err());
        let bad = HalfSpacePoint { z: vec![0.0; 6], t: -1.0 };
        assert!(bubble_eval(&p, &bad).is_err());
    }

    #[test]
    fn jacobi_values_at_origin() {
        let p = p7();
        let o = HalfSpacePoint::origin(6);
        assert_eq!(jacobi_field(&p, 7, &o).unwrap(), 2.5);
        assert_eq!(jacobi_field(&p, 1, &o).unwrap(), 0.0);
        assert!(matches!(jacobi_field(&p, 0, &o), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(jacobi_field(&p, 8, &o), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn dilation_field_matches_definition() {
        // j_n = (n-2)/2 U + y . grad U
        let p = p7();
        let y = HalfSpacePoint::new(vec![0.3, -0.2, 0.5, 0.1, 0.0, 0.7], 0.4).unwrap();
        let b = bubble_eval(&p, &y).unwrap();
        let mut dot = y.t * b.grad[6];
        for i in 0..6 {
            dot += y.z[i] * b.grad[i];
        }
        let jn = jacobi_field(&p, 7, &y).unwrap();
        assert!((jn - (2.5 * b.u + dot)).abs() < 1e-15);
    }

    #[test]
    fn dilation_field_is_harmonic() {
        let p = p7();
        let f = |z: &[f64], t: f64| jacobi_field(&p, 7, &HalfSpacePoint { z: z.to_vec(), t }).unwrap();
        let pts = [
            (vec![0.3, -0.2, 0.5, 0.1, 0.0, 0.7], 0.4),
            (vec![1.3, 0.2, -0.5, 0.9, 0.4, 0.0], 1.1),
            (vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.5),
        ];
        let e = 1e-3;
        for (z, t) in pts {
            let lap = fd_laplacian(&f, &z, t, e);
            assert!(lap.abs() < 1e-6, "laplacian {lap}");
        }
    }

    fn fd_laplacian(f: &dyn Fn(&[f64], f64) -> f64, z: &[f64], t: f64, e: f64) -> f64 {
        let c = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        let mut s = 0.0;
        for axis in 0..=z.len() {
            for (k, ck) in c.iter().enumerate() {
                let off = (k as f64 - 2.0) * e;
                let mut zz = z.to_vec();
                let mut tt = t;
                if axis < z.len() {
                    zz[axis] += off;
                } else {
                    tt += off;
                }
                s += ck * f(&zz, tt);
            }
        }
        s / (e * e)
    }

    proptest! {
        #[test]
        fn boundary_identity_holds(z in proptest::collection::vec(-20.0f64..20.0, 6)) {
            let r = boundary_identity_residual(&p7(), &z).unwrap();
            prop_assert!(r.abs() < 1e-12);
        }

        #[test]
        fn robin_identity_holds(b in 1usize..=7, z in proptest::collection::vec(-20.0f64..20.0, 6)) {
            let r = linearized_robin_residual(&p7(), b, &z).unwrap();
            prop_assert!(r.abs() < 1e-12);
        }

        #[test]
        fn bubble_bounded(z in proptest::collection::vec(-5.0f64..5.0, 6), t in 0.0f64..5.0) {
            let y = HalfSpacePoint::new(z, t).unwrap();
            let u = bubble_eval(&p7(), &y).unwrap().u;
            prop_assert!(u > 0.0 && u <= 1.0);
        }
    }
}
