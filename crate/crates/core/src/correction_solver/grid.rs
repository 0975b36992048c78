use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Spacing {
    Uniform,
    /// x = L (e^{βξ} - 1)/(e^β - 1), ξ uniform in [0, 1].
    Graded { beta: f64 },
}

/// Tensor grid on [0, r_max] x [0, t_max]; both axes start exactly at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub spacing: Spacing,
}

pub fn axis(len: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    let m = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                return len;
            }
            let xi = i as f64 / m;
            match spacing {
                Spacing::Uniform => len * xi,
                Spacing::Graded { beta } if beta > 0.0 => len * (beta * xi).exp_m1() / beta.exp_m1(),
                Spacing::Graded { .. } => len * xi,
            }
        })
        .collect()
}

impl Grid2D {
    pub fn new(r_max: f64, t_max: f64, n_r: usize, n_t: usize, spacing: Spacing) -> Result<Self> {
        if n_r < 3 || n_t < 3 {
            return Err(Error::InvalidParam("grid needs at least 3 points per axis".into()));
        }
        let g = Self { r: axis(r_max, n_r, spacing), t: axis(t_max, n_t, spacing), spacing };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        for a in [&self.r, &self.t] {
            if a[0] != 0.0 || a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParam("grid nodes must start at 0 and increase strictly".into()));
            }
        }
        Ok(())
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn nt(&self) -> usize {
        self.t.len()
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().expect("non-empty")
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.t.len() + j
    }
}

/// Trapezoid weights on a non-uniform axis.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = x[k + 1] - x[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

/// Second-order first derivative at every node of a non-uniform axis.
pub fn derivative(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    for k in 0..n {
        let (a, b, c) = if k == 0 {
            (0, 1, 2)
        } else if k == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (k - 1, k, k + 1)
        };
        // derivative of the quadratic through (a, b, c) evaluated at x[k]
        let (xa, xb, xc) = (x[a], x[b], x[c]);
        let xk = x[k];
        let la = ((xk - xb) + (xk - xc)) / ((xa - xb) * (xa - xc));
        let lb = ((xk - xa) + (xk - xc)) / ((xb - xa) * (xb - xc));
        let lc = ((xk - xa) + (xk - xb)) / ((xc - xa) * (xc - xb));
        d[k] = la * f[a] + lb * f[b] + lc * f[c];
    }
    d
}

/// Composite Simpson weights on a non-uniform axis (quadratic on each pair of
/// intervals); an odd last interval uses the quadratic through the last three nodes.
pub fn simpson_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    let pairs = (n - 1) / 2;
    for k in 0..pairs {
        let i = 2 * k;
        let (h0, h1) = (x[i + 1] - x[i], x[i + 2] - x[i + 1]);
        let s = (h0 + h1) / 6.0;
        w[i] += s * (2.0 - h1 / h0);
        w[i + 1] += s * (h0 + h1) * (h0 + h1) / (h0 * h1);
        w[i + 2] += s * (2.0 - h0 / h1);
    }
    if (n - 1) % 2 == 1 {
        let (a, b) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
        w[n - 3] -= b * b * b / (6.0 * a * (a + b));
        w[n - 2] += b * (3.0 * a + b) / (6.0 * a);
        w[n - 1] += b * (2.0 * b + 3.0 * a) / (6.0 * (a + b));
    }
    w
}

/// Fornberg weights for the m-th derivative at x0 from the given stencil.
pub fn fd_weights(stencil: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = stencil.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = stencil[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = stencil[i] - x0;
        for j in 0..i {
            let c3 = stencil[i] - stencil[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Five-point first derivative at every node (one-sided near the ends).
pub fn derivative5(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let start = k.saturating_sub(2).min(n - 5);
            let w = fd_weights(&x[start..start + 5], x[k], 1);
            w.iter().zip(&f[start..start + 5]).map(|(a, b)| a * b).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_axis_endpoints() {
        let g = Grid2D::new(60.0, 60.0, 600, 600, Spacing::Graded { beta: 3.6 }).unwrap();
        assert_eq!(g.r[0], 0.0);
        assert_eq!(g.r_max(), 60.0);
        assert!(g.r[1] > 0.009 && g.r[1] < 0.0102);
    }

    #[test]
    fn derivative_exact_on_quadratics() {
        let x = axis(3.0, 17, Spacing::Graded { beta: 2.0 });
        let f: Vec<f64> = x.iter().map(|x| 1.0 + 2.0 * x - x * x).collect();
        for (xi, di) in x.iter().zip(derivative(&x, &f)) {
            assert!((di - (2.0 - 2.0 * xi)).abs() < 1e-11);
        }
    }

    #[test]
    fn higher_order_rules() {
        let x = axis(2.0, 24, Spacing::Graded { beta: 2.0 });
        let w = simpson_weights(&x);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((q - 8.0 / 3.0).abs() < 1e-13);
        let err = |m: usize| {
            let x = axis(2.0, m, Spacing::Graded { beta: 2.0 });
            let q: f64 = x.iter().zip(simpson_weights(&x)).map(|(x, w)| w * x.exp()).sum();
            (q - 2f64.exp_m1()).abs()
        };
        let ratio = err(25) / err(49);
        assert!((ratio.log2() - 4.0).abs() < 0.3, "{ratio}");
        let x = axis(2.0, 25, Spacing::Graded { beta: 2.0 });
        let f: Vec<f64> = x.iter().map(|x| x.powi(4) - x).collect();
        for (xi, d) in x.iter().zip(derivative5(&x, &f)) {
            assert!((d - (4.0 * xi.powi(3) - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn trapezoid_sums_length() {
        let x = axis(5.0, 33, Spacing::Graded { beta: 1.0 });
        assert!((trapezoid_weights(&x).iter().sum::<f64>() - 5.0).abs() < 1e-14);
    }
}
