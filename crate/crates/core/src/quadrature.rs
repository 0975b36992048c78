//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) with a tangent
//! map for half-lines, and Gauss–Legendre rules for fixed composite panels.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Options for the adaptive driver.
#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl QuadOpts {
    pub fn rel(rel_tol: f64) -> Self {
        Self { rel_tol, abs_tol: 0.0, max_intervals: 4000 }
    }
}

/// Globally adaptive bisection on [a, b]. Returns (value, error estimate).
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOpts) -> Result<(f64, f64)> {
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    segs.push((a, b, v, e));
    loop {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) || err < 1e-300 {
            return Ok((total, err));
        }
        if segs.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence after {} intervals (value {total:e}, error {err:e})",
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (sa, sb, _, _) = segs.swap_remove(idx);
        let m = 0.5 * (sa + sb);
        let (v1, e1) = gk15(&f, sa, m);
        let (v2, e2) = gk15(&f, m, sb);
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
    }
}

/// ∫_0^∞ f via x = tan θ.
pub fn half_line<F: Fn(f64) -> f64>(f: F, opts: QuadOpts) -> Result<(f64, f64)> {
    let g = |th: f64| {
        let c = th.cos();
        if c <= 0.0 {
            return 0.0;
        }
        f(th.tan()) / (c * c)
    };
    adaptive(g, 0.0, std::f64::consts::FRAC_PI_2, opts)
}

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on the three-term recurrence).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule on the given breakpoints.
pub fn composite_rule(breaks: &[f64], per_panel: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(per_panel);
    let mut out = Vec::with_capacity((breaks.len() - 1) * per_panel);
    for p in breaks.windows(2) {
        let (a, b) = (p[0], p[1]);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for k in 0..per_panel {
            out.push((c + h * x[k], h * w[k]));
        }
    }
    out
}

/// Breakpoints 0, 1/2, 1, 2, 4, ... capped at `end`.
pub fn geometric_breaks(end: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = 0.5;
    while x < end {
        b.push(x);
        x *= 2.0;
    }
    b.push(end);
    b
}
