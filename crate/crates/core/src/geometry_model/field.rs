use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use super::jet::{scalar_curvature_check, FermiMetricJet};
use crate::core_math::TraceFreeForm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPoint {
    pub id: usize,
    pub coords: Vec<f64>,
    pub gamma: f64,
    pub jet: FermiMetricJet,
}

/// Regular parameter grid; points are stored in row-major order of `shape`
/// and `points[k].id == k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub shape: Vec<usize>,
    pub periodic: Vec<bool>,
    pub spacing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryField {
    pub n: usize,
    pub points: Vec<BoundaryPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

impl BoundaryField {
    /// Structural and geometric validation; returns warnings for points with π = 0.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.points.is_empty() {
            return Err(Error::Geometry("boundary field has no points".into()));
        }
        let mut warnings = Vec::new();
        for (k, p) in self.points.iter().enumerate() {
            if p.id != k {
                return Err(Error::Geometry(format!("point ids must be 0..N in order; found {} at position {k}", p.id)));
            }
            if p.jet.n() != self.n {
                return Err(Error::Dimension { expected: self.n - 1, got: p.jet.dim() });
            }
            if !(p.gamma > 0.0 && p.gamma.is_finite()) {
                return Err(Error::Geometry(format!("gamma must be positive at point {k}, got {}", p.gamma)));
            }
            p.jet.validate().map_err(|e| Error::Geometry(format!("point {k}: {e}")))?;
            let c = scalar_curvature_check(&p.jet);
            if !c.ok {
                return Err(Error::Geometry(format!("point {k}: scalar curvature relation off by {:e}", c.residual)));
            }
            if p.jet.pi_norm_sq == 0.0 {
                warnings.push(format!("point {k}: trace-free second fundamental form vanishes"));
            }
        }
        if warnings.len() == self.points.len() {
            return Err(Error::Geometry("trace-free second fundamental form vanishes at every point".into()));
        }
        if let Some(l) = &self.lattice {
            if l.shape.len() != l.periodic.len() || l.shape.len() != l.spacing.len() || l.shape.is_empty() {
                return Err(Error::Geometry("lattice shape, periodic and spacing must have equal length".into()));
            }
            if l.shape.iter().product::<usize>() != self.points.len() {
                return Err(Error::Geometry("lattice shape does not match the number of points".into()));
            }
            if l.spacing.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::Geometry("lattice spacing must be positive".into()));
            }
        }
        for w in &warnings {
            tracing::warn!("{w}");
        }
        Ok(warnings)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        f.validate()?;
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn point(&self, id: usize) -> Result<&BoundaryPoint> {
        self.points.get(id).ok_or(Error::UnknownPoint(id))
    }

    /// Lattice neighbours of `id` along `axis` as (minus, plus), wrapping on periodic axes.
    pub fn neighbours(&self, id: usize, axis: usize) -> Option<(usize, usize)> {
        let l = self.lattice.as_ref()?;
        let mut idx = Vec::with_capacity(l.shape.len());
        let mut rest = id;
        for &s in l.shape.iter().rev() {
            idx.push(rest % s);
            rest /= s;
        }
        idx.reverse();
        let s = l.shape[axis];
        let (lo, hi) = if l.periodic[axis] {
            ((idx[axis] + s - 1) % s, (idx[axis] + 1) % s)
        } else if idx[axis] == 0 || idx[axis] + 1 == s {
            return None;
        } else {
            (idx[axis] - 1, idx[axis] + 1)
        };
        let flat = |v: usize| {
            let mut j = idx.clone();
            j[axis] = v;
            j.iter().zip(&l.shape).fold(0, |acc, (a, s)| acc * s + a)
        };
        Some((flat(lo), flat(hi)))
    }
}

fn jet_with_pi(d: usize, pi_norm_sq: f64) -> FermiMetricJet {
    // diag(c, -c, 0, ...) has |h|² = 2c²
    FermiMetricJet::from_h(TraceFreeForm::diag_pair(d, (pi_norm_sq / 2.0).sqrt()))
}

fn periodic_grid(shape: &[usize], mut value: impl FnMut(&[f64]) -> (f64, f64), n: usize) -> Result<BoundaryField> {
    if shape.is_empty() || shape.len() > 2 || shape.iter().any(|&s| s < 3) {
        return Err(Error::InvalidParam("generators take a 1D or 2D shape with at least 3 points per axis".into()));
    }
    if n < 3 {
        return Err(Error::InvalidParam("n must be at least 3".into()));
    }
    let total: usize = shape.iter().product();
    let mut points = Vec::with_capacity(total);
    for id in 0..total {
        let mut rest = id;
        let mut coords = vec![0.0; shape.len()];
        for (a, &s) in shape.iter().enumerate().rev() {
            coords[a] = 2.0 * PI * (rest % s) as f64 / s as f64;
            rest /= s;
        }
        let (gamma, pi) = value(&coords);
        points.push(BoundaryPoint { id, coords, gamma, jet: jet_with_pi(n - 1, pi) });
    }
    let lattice = Lattice {
        shape: shape.to_vec(),
        periodic: vec![true; shape.len()],
        spacing: shape.iter().map(|&s| 2.0 * PI / s as f64).collect(),
    };
    let f = BoundaryField { n, points, lattice: Some(lattice) };
    f.validate()?;
    Ok(f)
}

/// Constant γ, ‖π‖² = p0 (1 + Σ sin² θ_a).
pub fn sinusoidal_pi_field(n: usize, shape: &[usize], gamma: f64, p0: f64) -> Result<BoundaryField> {
    periodic_grid(shape, |c| (gamma, p0 * (1.0 + c.iter().map(|x| x.sin().powi(2)).sum::<f64>())), n)
}

/// γ = γ0 (1 + ½ Σ sin² θ_a), constant ‖π‖² = p0.
pub fn varying_gamma_field(n: usize, shape: &[usize], gamma0: f64, p0: f64) -> Result<BoundaryField> {
    periodic_grid(shape, |c| (gamma0 * (1.0 + 0.5 * c.iter().map(|x| x.sin().powi(2)).sum::<f64>()), p0), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoidal_field_round_trip() {
        let f = sinusoidal_pi_field(7, &[8], 1.0, 0.5).unwrap();
        assert_eq!(f.points.len(), 8);
        assert!((f.points[0].jet.pi_norm_sq - 0.5).abs() < 1e-15);
        assert!((f.points[2].jet.pi_norm_sq - 1.0).abs() < 1e-15);
        let s = f.to_json().unwrap();
        assert!(s.contains("\"Rbar_ricci\""));
        let g = BoundaryField::from_json(&s).unwrap();
        assert_eq!(f.to_json().unwrap(), g.to_json().unwrap());
    }

    #[test]
    fn neighbours_wrap() {
        let f = varying_gamma_field(7, &[4, 5], 1.0, 1.0).unwrap();
        assert_eq!(f.neighbours(0, 0), Some((15, 5)));
        assert_eq!(f.neighbours(0, 1), Some((4, 1)));
        assert_eq!(f.neighbours(7, 1), Some((6, 8)));
    }

    #[test]
    fn load_rejects_bad_fields() {
        let mut f = sinusoidal_pi_field(7, &[4], 1.0, 0.5).unwrap();
        f.points[1].gamma = -1.0;
        assert!(BoundaryField::from_json(&f.to_json().unwrap()).is_err());
        let mut f = sinusoidal_pi_field(7, &[4], 1.0, 0.5).unwrap();
        f.points[1].jet.a += 1.0;
        assert!(BoundaryField::from_json(&f.to_json().unwrap()).is_err());
        let f = sinusoidal_pi_field(7, &[4], 1.0, 0.0);
        assert!(f.is_err());
        let s = r#"{"n": 7, "points": [], "extra": 1}"#;
        assert!(BoundaryField::from_json(s).is_err());
    }
}
