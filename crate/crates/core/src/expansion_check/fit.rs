use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::report::csv_err;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermId {
    I2,
    I3,
    I5,
    #[serde(rename = "I1prime")]
    I1Prime,
    I4,
    #[serde(rename = "combined")]
    Combined,
    #[serde(rename = "remainder")]
    Remainder,
}

impl TermId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TermId::I2 => "I2",
            TermId::I3 => "I3",
            TermId::I5 => "I5",
            TermId::I1Prime => "I1prime",
            TermId::I4 => "I4",
            TermId::Combined => "combined",
            TermId::Remainder => "remainder",
        }
    }
}

/// One term of the expansion sampled at decreasing scales and fitted.
///
/// `fitted_coeff` is the coefficient of `scale^order`. For terms with an
/// order-zero part, `fitted_order` is the log-log slope of `value − fitted_constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFit {
    pub term_id: TermId,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub order: f64,
    pub fitted_coeff: f64,
    pub predicted_coeff: f64,
    pub rel_err: f64,
    /// None when the sub-leading part is below the quadrature noise floor at every scale.
    pub fitted_order: Option<f64>,
    pub local_orders: Vec<f64>,
    pub fitted_constant: Option<f64>,
    pub predicted_constant: Option<f64>,
    pub checks: BTreeMap<String, f64>,
}

impl TermFit {
    pub fn constant_rel_err(&self) -> Option<f64> {
        Some(rel_err(self.fitted_constant?, self.predicted_constant?))
    }

    /// Rows: term_id, delta, value, predicted, fitted_coeff, rel_err, fitted_order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term_id", "delta", "value", "predicted", "fitted_coeff", "rel_err", "fitted_order"])
            .map_err(csv_err)?;
        for (d, v) in self.deltas.iter().zip(&self.values) {
            let predicted = self.predicted_constant.unwrap_or(0.0) + self.predicted_coeff * d.powf(self.order);
            let order = self.fitted_order.map_or(String::new(), |o| format!("{o:e}"));
            w.write_record([
                self.term_id.as_str().to_string(),
                format!("{d:e}"),
                format!("{v:e}"),
                format!("{predicted:e}"),
                format!("{:e}", self.fitted_coeff),
                format!("{:e}", self.rel_err),
                order,
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// |f − p| / |p|, or |f − p| when p = 0.
pub fn rel_err(fitted: f64, predicted: f64) -> f64 {
    if predicted == 0.0 {
        (fitted - predicted).abs()
    } else {
        ((fitted - predicted) / predicted).abs()
    }
}

pub(crate) fn check_scales(xs: &[f64]) -> Result<()> {
    if xs.len() < 3 {
        return Err(Error::InvalidParam("need at least 3 scales".into()));
    }
    if xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParam("scales must be positive".into()));
    }
    if xs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParam("scales must be strictly decreasing".into()));
    }
    Ok(())
}

/// Least squares for y = Σ c_k x^{p_k}.
pub fn fit_powers(x: &[f64], y: &[f64], powers: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.len() < powers.len() {
        return Err(Error::FitRejected(format!("{} samples for {} coefficients", x.len(), powers.len())));
    }
    let xm = x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let a = DMatrix::from_fn(x.len(), powers.len(), |i, k| (x[i] / xm).powf(powers[k]));
    let c = a
        .svd(true, true)
        .solve(&DVector::from_column_slice(y), 1e-15)
        .map_err(|e| Error::FitRejected(e.to_string()))?;
    Ok(c.iter().zip(powers).map(|(c, &k)| c / xm.powf(k)).collect())
}

/// Log-log slope of |y|, or None if some |y| is at or below `floor`.
pub fn log_slope(x: &[f64], y: &[f64], floor: f64) -> Option<f64> {
    if y.iter().any(|v| !(v.abs() > floor)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    Some(crate::correction_solver::diagnostics::slope(&lx, &ly))
}

/// Pairwise orders log(|y_k|/|y_{k+1}|) / log(x_k/x_{k+1}).
pub fn local_orders(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| (b[0].abs() / b[1].abs()).ln() / (a[0] / a[1]).ln())
        .collect()
}

pub(crate) struct FitSpec {
    pub term_id: TermId,
    pub order: f64,
    /// model powers; must contain `order`, and 0 when the term has a constant part
    pub powers: Vec<f64>,
    pub predicted_coeff: f64,
    pub predicted_constant: Option<f64>,
    /// absolute noise floor for the order estimate
    pub floor: f64,
}

pub(crate) fn make_fit(spec: FitSpec, deltas: &[f64], values: Vec<f64>) -> Result<TermFit> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite {} value", spec.term_id.as_str())));
    }
    let c = fit_powers(deltas, &values, &spec.powers)?;
    let at = |k: f64| spec.powers.iter().position(|&p| p == k).map(|i| c[i]);
    let fitted_coeff = at(spec.order).ok_or_else(|| Error::FitRejected("order missing from the model".into()))?;
    let fitted_constant = at(0.0).filter(|_| spec.order != 0.0);
    let rest: Vec<f64> = values.iter().map(|v| v - fitted_constant.unwrap_or(0.0)).collect();
    let mut checks = BTreeMap::new();
    for (k, p) in spec.powers.iter().enumerate() {
        checks.insert(format!("coeff_pow_{p}"), c[k]);
    }
    Ok(TermFit {
        term_id: spec.term_id,
        deltas: deltas.to_vec(),
        rel_err: rel_err(fitted_coeff, spec.predicted_coeff),
        fitted_order: log_slope(deltas, &rest, spec.floor),
        local_orders: local_orders(deltas, &rest),
        values,
        order: spec.order,
        fitted_coeff,
        predicted_coeff: spec.predicted_coeff,
        fitted_constant,
        predicted_constant: spec.predicted_constant,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_models() {
        let x = [0.1, 0.05, 0.025, 0.0125];
        let y: Vec<f64> = x.iter().map(|d| 3.0 - 0.7 * d * d + 2.0 * d * d * d).collect();
        let c = fit_powers(&x, &y, &[0.0, 2.0, 3.0]).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 0.7).abs() < 1e-9 && (c[2] - 2.0).abs() < 1e-7);
        let spec = FitSpec { term_id: TermId::I5, order: 2.0, powers: vec![0.0, 2.0, 3.0], predicted_coeff: -0.7, predicted_constant: Some(3.0), floor: 1e-14 };
        let f = make_fit(spec, &x, y).unwrap();
        assert!(f.rel_err < 1e-8);
        assert!((f.fitted_order.unwrap() - 2.0).abs() < 0.2);
        assert!(f.constant_rel_err().unwrap() < 1e-12);
    }

    #[test]
    fn vanishing_term_has_no_order() {
        let x = [0.1, 0.05, 0.025];
        let spec = FitSpec { term_id: TermId::I2, order: 2.0, powers: vec![2.0, 3.0], predicted_coeff: 0.0, predicted_constant: None, floor: 1e-14 };
        let f = make_fit(spec, &x, vec![0.0; 3]).unwrap();
        assert_eq!(f.fitted_order, None);
        assert_eq!(f.rel_err, 0.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("term_id,delta,value,predicted,fitted_coeff,rel_err,fitted_order"));
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn scale_checks() {
        assert!(check_scales(&[0.1, 0.05]).is_err());
        assert!(check_scales(&[0.1, 0.1, 0.05]).is_err());
        assert!(check_scales(&[0.1, 0.05, 0.025]).is_ok());
    }
}
