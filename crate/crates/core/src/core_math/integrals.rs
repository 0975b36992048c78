//! I_m^α = ∫_0^∞ ρ^α (1+ρ²)^{-m} dρ and the t-moments ∫_0^∞ t^k (1+t)^{-m} dt.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{half_line, QuadOpts};

/// Γ(x), exact products for integer and half-integer arguments.
pub fn gamma_fn(x: f64) -> f64 {
    let twice = 2.0 * x;
    if x > 0.0 && x < 160.0 && twice == twice.round() {
        let mut v = if x.fract() == 0.0 { 1.0 } else { std::f64::consts::PI.sqrt() };
        let mut y = if x.fract() == 0.0 { 1.0 } else { 0.5 };
        while y < x {
            v *= y;
            y += 1.0;
        }
        v
    } else {
        gamma(x)
    }
}

/// Euler Beta function; direct Gamma products while they stay in range.
pub fn beta_fn(a: f64, b: f64) -> f64 {
    if a + b < 150.0 {
        gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b)
    } else {
        (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
    }
}

fn check_i(m: f64, alpha: f64) -> Result<()> {
    if !(alpha > -1.0 && 2.0 * m - alpha - 1.0 > 0.0) || !m.is_finite() || !alpha.is_finite() {
        return Err(Error::DivergentIntegral { m, alpha });
    }
    Ok(())
}

/// Closed form ½ B((α+1)/2, m-(α+1)/2).
pub fn integral_i(m: f64, alpha: f64) -> Result<f64> {
    check_i(m, alpha)?;
    let a = 0.5 * (alpha + 1.0);
    Ok(0.5 * beta_fn(a, m - a))
}

/// Adaptive-quadrature evaluation of I_m^α, used as an oracle.
pub fn integral_i_quadrature(m: f64, alpha: f64, rel_tol: f64) -> Result<f64> {
    check_i(m, alpha)?;
    let (v, _) = half_line(|x| x.powf(alpha) * (1.0 + x * x).powf(-m), QuadOpts::rel(rel_tol))?;
    Ok(v)
}

/// ∫_0^∞ t^k/(1+t)^m dt = k!/((m-1)(m-2)...(m-k-1)).
pub fn beta_integral_t(k: i64, m: i64) -> Result<f64> {
    if k < 0 || m <= k + 1 {
        return Err(Error::DivergentBeta { k, m });
    }
    let mut v = 1.0;
    for j in 1..=k {
        v *= j as f64;
    }
    for j in 1..=(k + 1) {
        v /= (m - j) as f64;
    }
    Ok(v)
}

pub fn beta_integral_t_quadrature(k: i64, m: i64, rel_tol: f64) -> Result<f64> {
    if k < 0 || m <= k + 1 {
        return Err(Error::DivergentBeta { k, m });
    }
    let (v, _) = half_line(|t| t.powi(k as i32) / (1.0 + t).powi(m as i32), QuadOpts::rel(rel_tol))?;
    Ok(v)
}

/// Residuals of the three recurrences relating neighbouring I_m^α.
/// Each entry is a relative residual; None where a recurrence leaves the convergent range.
pub fn recurrence_residuals(m: f64, alpha: f64) -> Result<[Option<f64>; 3]> {
    let base = integral_i(m, alpha)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    // I_m^α = 2m/(α+1) I_{m+1}^{α+2}
    let r1 = integral_i(m + 1.0, alpha + 2.0).ok().map(|x| rel(2.0 * m / (alpha + 1.0) * x, base));
    // I_m^α = 2m/(2m-α-1) I_{m+1}^α
    let r2 = integral_i(m + 1.0, alpha)
        .ok()
        .map(|x| rel(2.0 * m / (2.0 * m - alpha - 1.0) * x, base));
    // I_m^α = (2m-α-3)/(α+1) I_m^{α+2}
    let r3 = integral_i(m, alpha + 2.0)
        .ok()
        .map(|x| rel((2.0 * m - alpha - 3.0) / (alpha + 1.0) * x, base));
    Ok([r1, r2, r3])
}
