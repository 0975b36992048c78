//! Cubic splines on non-uniform nodes and a tensor-product evaluator for profiles.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    Natural,
    Slope(f64),
}

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: &[f64], y: &[f64], left: EndCondition, right: EndCondition) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::InvalidParam("spline needs matching arrays of at least 3 nodes".into()));
        }
        let m = second_derivatives(x, y, left, right);
        Ok(Self { x: x.to_vec(), y: y.to_vec(), m })
    }

    fn segment(&self, t: f64) -> usize {
        segment_of(&self.x, t)
    }

    /// Value, first and second derivative; linear-cubic extrapolation outside the nodes.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let k = self.segment(t);
        eval_segment(&self.x, &self.y, &self.m, k, t)
    }
}

fn eval_segment(x: &[f64], y: &[f64], m: &[f64], k: usize, t: f64) -> (f64, f64, f64) {
    let h = x[k + 1] - x[k];
    let a = (x[k + 1] - t) / h;
    let b = (t - x[k]) / h;
    let f = a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
    let d = (y[k + 1] - y[k]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[k] + (3.0 * b * b - 1.0) / 6.0 * h * m[k + 1];
    let dd = a * m[k] + b * m[k + 1];
    (f, d, dd)
}

fn second_derivatives(x: &[f64], y: &[f64], left: EndCondition, right: EndCondition) -> Vec<f64> {
    let n = x.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        sub[i] = h0 / 6.0;
        diag[i] = (h0 + h1) / 3.0;
        sup[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    let h0 = x[1] - x[0];
    match left {
        EndCondition::Natural => diag[0] = 1.0,
        EndCondition::Slope(s) => {
            diag[0] = h0 / 3.0;
            sup[0] = h0 / 6.0;
            rhs[0] = (y[1] - y[0]) / h0 - s;
        }
    }
    let hl = x[n - 1] - x[n - 2];
    match right {
        EndCondition::Natural => diag[n - 1] = 1.0,
        EndCondition::Slope(s) => {
            sub[n - 1] = hl / 6.0;
            diag[n - 1] = hl / 3.0;
            rhs[n - 1] = s - (y[n - 1] - y[n - 2]) / hl;
        }
    }
    tridiagonal(&sub, &diag, &sup, &mut rhs);
    rhs
}

/// Thomas algorithm; solution overwrites `rhs`.
pub fn tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
}

/// Tensor spline for w(r,t): one spline in t per r-node (Robin slope at t = 0),
/// then a spline in r through the row values (zero slope on the axis).
#[derive(Debug, Clone)]
pub struct ProfileSpline {
    r: Vec<f64>,
    t: Vec<f64>,
    rows: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ProfileSpline {
    pub fn new(n: usize, r: &[f64], t: &[f64], w: &[f64]) -> Result<Self> {
        let nt = t.len();
        let nf = n as f64;
        let rows = r
            .iter()
            .enumerate()
            .map(|(i, &ri)| {
                let y = w[i * nt..(i + 1) * nt].to_vec();
                let slope = -nf * y[0] / (1.0 + ri * ri);
                let m = second_derivatives(t, &y, EndCondition::Slope(slope), EndCondition::Natural);
                (y, m)
            })
            .collect();
        Ok(Self { r: r.to_vec(), t: t.to_vec(), rows })
    }

    /// w(r, t) for r, t inside the grid.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let k = self.t_segment(t);
        let g: Vec<f64> = self.rows.iter().map(|(y, m)| eval_segment(&self.t, y, m, k, t).0).collect();
        let m = second_derivatives(&self.r, &g, EndCondition::Slope(0.0), EndCondition::Natural);
        eval_segment(&self.r, &g, &m, self.r_segment(r), r).0
    }

    /// (w, w_r, w_t) for r, t inside the grid.
    pub fn eval_grad(&self, r: f64, t: f64) -> (f64, f64, f64) {
        let k = self.t_segment(t);
        let (g, gt): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .map(|(y, m)| {
                let e = eval_segment(&self.t, y, m, k, t);
                (e.0, e.1)
            })
            .unzip();
        let kr = self.r_segment(r);
        let m = second_derivatives(&self.r, &g, EndCondition::Slope(0.0), EndCondition::Natural);
        let mt = second_derivatives(&self.r, &gt, EndCondition::Slope(0.0), EndCondition::Natural);
        let (w, wr, _) = eval_segment(&self.r, &g, &m, kr, r);
        (w, wr, eval_segment(&self.r, &gt, &mt, kr, r).0)
    }

    fn t_segment(&self, t: f64) -> usize {
        segment_of(&self.t, t)
    }

    fn r_segment(&self, r: f64) -> usize {
        segment_of(&self.r, r)
    }
}

fn segment_of(x: &[f64], v: f64) -> usize {
    match x.partition_point(|&a| a <= v) {
        0 => 0,
        k if k >= x.len() => x.len() - 2,
        k => k - 1,
    }
}
