use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use boundary_bubble::expansion_check::{Cutoff, ExpansionOptions, TermId};
use boundary_bubble::geometry_model::{sinusoidal_pi_field, varying_gamma_field, BoundaryField};
use boundary_bubble::reduced_energy::CriticalOptions;
use boundary_bubble::{ProblemParams, TraceFreeForm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a run depends on. Sections are optional in the file; command-line
/// flags are merged on top before validation and hashing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub quad_tol: f64,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub h: Option<FormSpec>,
    pub field: Option<FieldSpec>,
    pub correction: CorrectionConfig,
    pub conjecture: ConjectureConfig,
    pub reduce: ReduceConfig,
    pub expansion: ExpansionConfig,
    pub remainder: RemainderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n_r: usize,
    pub n_t: usize,
    pub r_max: f64,
    pub t_max: f64,
    /// exponential grading strength; 0 means uniform
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

/// Trace-free form h: explicit rows, the diagonal pair diag(c, -c, 0, ...), or a
/// seeded random form of the given Frobenius norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSpec {
    Rows(Vec<Vec<f64>>),
    DiagPair(f64),
    Random(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Path(PathBuf),
    Sinusoidal(BuiltinField),
    VaryingGamma(BuiltinField),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinField {
    pub shape: Vec<usize>,
    pub gamma: f64,
    pub p0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrectionConfig {
    /// grid sizes for a refinement study; empty skips it
    pub refine: Vec<usize>,
    pub oracle_samples: usize,
    pub profile_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjectureConfig {
    pub samples: usize,
    pub resolve: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub tie_tol: f64,
    pub degenerate_tol: f64,
    pub stencil_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionConfig {
    pub terms: Vec<TermId>,
    pub deltas: Vec<f64>,
    pub eps: Vec<f64>,
    pub lambda: f64,
    /// used when no field is given
    pub gamma: f64,
    pub jet_scale: f64,
    pub point: usize,
    pub cutoff_radius: f64,
    pub angular_order: usize,
    pub boundary_angular_order: usize,
    pub panel_nodes: usize,
    pub theta_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemainderConfig {
    pub eps: Vec<f64>,
    pub lambda: f64,
    pub cutoff: Cutoff,
    pub cutoff_radius: f64,
    pub jet_scale: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 7,
            seed: 42,
            quad_tol: ProblemParams::default().quad_tol,
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            h: None,
            field: None,
            correction: CorrectionConfig::default(),
            conjecture: ConjectureConfig::default(),
            reduce: ReduceConfig::default(),
            expansion: ExpansionConfig::default(),
            remainder: RemainderConfig::default(),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        let p = ProblemParams::default();
        Self { n_r: p.n_r, n_t: p.n_t, r_max: p.r_max, t_max: p.t_max, grading: p.grading }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = ProblemParams::default();
        Self { tol: p.solver_tol, max_iter: p.max_iter }
    }
}

impl Default for CorrectionConfig {
    fn default() -> Self {
        Self { refine: Vec::new(), oracle_samples: 100, profile_csv: None }
    }
}

impl Default for ConjectureConfig {
    fn default() -> Self {
        Self { samples: 20, resolve: false }
    }
}

impl Default for ReduceConfig {
    fn default() -> Self {
        let o = CriticalOptions::default();
        Self { tie_tol: o.tie_tol, degenerate_tol: o.degenerate_tol, stencil_step: o.stencil_step }
    }
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        let o = ExpansionOptions::default();
        Self {
            terms: vec![TermId::I2, TermId::I3, TermId::I5, TermId::I1Prime, TermId::I4, TermId::Combined],
            deltas: vec![0.1, 0.05, 0.025, 0.0125],
            eps: vec![0.1, 0.05, 0.025],
            lambda: 1.0,
            gamma: 1.0,
            jet_scale: 0.3,
            point: 0,
            cutoff_radius: o.cutoff_radius,
            angular_order: o.angular_order,
            boundary_angular_order: o.boundary_angular_order,
            panel_nodes: o.panel_nodes,
            theta_nodes: o.theta_nodes,
        }
    }
}

impl Default for RemainderConfig {
    fn default() -> Self {
        Self { eps: vec![0.1, 0.05, 0.025], lambda: 1.0, cutoff: Cutoff::Flat, cutoff_radius: ExpansionOptions::default().cutoff_radius, jet_scale: 0.3 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&s).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams {
            n: self.n,
            quad_tol: self.quad_tol,
            r_max: self.grid.r_max,
            t_max: self.grid.t_max,
            n_r: self.grid.n_r,
            n_t: self.grid.n_t,
            grading: self.grid.grading,
            solver_tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    /// Checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        let e = &self.expansion;
        if !(e.lambda > 0.0 && e.lambda.is_finite()) || !(self.remainder.lambda > 0.0 && self.remainder.lambda.is_finite()) {
            bail!("lambda must be positive and finite");
        }
        if e.terms.contains(&TermId::Remainder) {
            bail!("the remainder has its own subcommand");
        }
        self.expansion_options().validate()?;
        if self.conjecture.samples < 2 {
            bail!("conjecture needs at least 2 samples");
        }
        if self.correction.refine.iter().any(|&m| m < 8) {
            bail!("refinement grids need at least 8 points per axis");
        }
        Ok(())
    }

    pub fn expansion_options(&self) -> ExpansionOptions {
        let e = &self.expansion;
        ExpansionOptions {
            cutoff_radius: e.cutoff_radius,
            angular_order: e.angular_order,
            boundary_angular_order: e.boundary_angular_order,
            panel_nodes: e.panel_nodes,
            theta_nodes: e.theta_nodes,
        }
    }

    pub fn critical_options(&self) -> CriticalOptions {
        CriticalOptions { tie_tol: self.reduce.tie_tol, degenerate_tol: self.reduce.degenerate_tol, stencil_step: self.reduce.stencil_step }
    }

    pub fn form(&self) -> Result<TraceFreeForm> {
        let d = self.n - 1;
        let h = match &self.h {
            None => bail!("this command needs a trace-free form (--h or \"h\" in the config)"),
            Some(FormSpec::Rows(rows)) => TraceFreeForm::from_rows(rows)?,
            Some(FormSpec::DiagPair(c)) => TraceFreeForm::diag_pair(d, *c),
            Some(FormSpec::Random(norm)) => TraceFreeForm::random(d, *norm, &mut ChaCha8Rng::seed_from_u64(self.seed)),
        };
        if h.dim() != d {
            bail!("form has dimension {}, expected {d} for n = {}", h.dim(), self.n);
        }
        Ok(h)
    }

    pub fn boundary_field(&self) -> Result<Option<BoundaryField>> {
        let f = match &self.field {
            None => return Ok(None),
            Some(FieldSpec::Path(p)) => BoundaryField::load(p).with_context(|| format!("loading field {}", p.display()))?,
            Some(FieldSpec::Sinusoidal(b)) => sinusoidal_pi_field(self.n, &b.shape, b.gamma, b.p0)?,
            Some(FieldSpec::VaryingGamma(b)) => varying_gamma_field(self.n, &b.shape, b.gamma, b.p0)?,
        };
        if f.n != self.n {
            bail!("field is for n = {} but the run uses n = {}", f.n, self.n);
        }
        Ok(Some(f))
    }

    /// sha256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
