use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use boundary_bubble::expansion_check::{Cutoff, TermId};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands;
use crate::config::{BuiltinField, FieldSpec, FormSpec, RunConfig};
use crate::report;

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "boundary-bubble", version, about = "Reduced-energy experiments for boundary bubbling")]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the parallel parts (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// A, B, ω_{n-1} and the I integrals
    Constants(Dim),
    /// Solve the correction problem for one form h
    Correction {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        form: FormArgs,
        /// comma-separated grid sizes for a refinement study
        #[arg(long, value_delimiter = ',')]
        refine: Option<Vec<usize>>,
        /// write the profile w(r,t) as CSV
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        oracle_samples: Option<usize>,
    },
    /// φ at every point of a field, or for a single form
    Phi {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        form: FormArgs,
    },
    /// Critical point of the reduced functional over a boundary field
    Reduce {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// φ/‖h‖² over seeded random forms
    Conjecture {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        samples: Option<usize>,
        /// solve once per form instead of rebinding one profile
        #[arg(long)]
        resolve: bool,
    },
    /// Term-by-term check of the small-scale energy expansion
    Expansion {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        field: FieldArgs,
        /// I1prime, I2, I3, I4, I5 or combined; repeatable
        #[arg(long = "term", value_parser = parse_term)]
        terms: Vec<TermId>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        point: Option<usize>,
        #[arg(long)]
        jet_scale: Option<f64>,
        #[arg(long)]
        cutoff_radius: Option<f64>,
    },
    /// Scaling of the boundary-mismatch norm
    Remainder {
        #[command(flatten)]
        dim: Dim,
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum)]
        cutoff: Option<CutoffArg>,
        #[arg(long)]
        cutoff_radius: Option<f64>,
    },
}

#[derive(Args)]
struct Dim {
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_r: Option<usize>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    grading: Option<f64>,
}

#[derive(Args)]
struct FormArgs {
    /// JSON file with the rows of h
    #[arg(long, conflicts_with_all = ["h_diag", "h_random"])]
    h: Option<PathBuf>,
    /// h = diag(c, -c, 0, ...)
    #[arg(long)]
    h_diag: Option<f64>,
    /// seeded random h with this Frobenius norm
    #[arg(long, conflicts_with = "h_diag")]
    h_random: Option<f64>,
}

#[derive(Args)]
struct FieldArgs {
    /// boundary field JSON
    #[arg(long, conflicts_with_all = ["sinusoidal", "varying_gamma"])]
    field: Option<PathBuf>,
    /// builtin constant-γ field with ‖π‖² = p0(1 + Σ sin²); comma-separated lattice shape
    #[arg(long, value_delimiter = ',', conflicts_with = "varying_gamma")]
    sinusoidal: Option<Vec<usize>>,
    /// builtin field with varying γ and constant ‖π‖²
    #[arg(long, value_delimiter = ',')]
    varying_gamma: Option<Vec<usize>>,
    /// γ of a builtin field (default 1), or of the random jet in `expansion`
    #[arg(long)]
    gamma: Option<f64>,
    /// ‖π‖² scale of a builtin field (default 0.5)
    #[arg(long)]
    p0: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutoffArg {
    Flat,
    Bump,
}

fn parse_term(s: &str) -> std::result::Result<TermId, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown term {s:?}"))
}

impl Dim {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(n) = self.n {
            c.n = n;
        }
    }
}

impl GridArgs {
    fn apply(&self, c: &mut RunConfig) {
        Dim { n: self.n }.apply(c);
        let g = &mut c.grid;
        g.n_r = self.n_r.unwrap_or(g.n_r);
        g.n_t = self.n_t.unwrap_or(g.n_t);
        g.r_max = self.r_max.unwrap_or(g.r_max);
        g.t_max = self.t_max.unwrap_or(g.t_max);
        g.grading = self.grading.unwrap_or(g.grading);
    }
}

impl FormArgs {
    fn apply(&self, c: &mut RunConfig) -> Result<()> {
        if let Some(p) = &self.h {
            let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            c.h = Some(FormSpec::Rows(serde_json::from_str(&s).with_context(|| format!("parsing rows of h in {}", p.display()))?));
        } else if let Some(x) = self.h_diag {
            c.h = Some(FormSpec::DiagPair(x));
        } else if let Some(x) = self.h_random {
            c.h = Some(FormSpec::Random(x));
        }
        Ok(())
    }
}

impl FieldArgs {
    fn apply(&self, c: &mut RunConfig) {
        let builtin = |shape: &Vec<usize>| BuiltinField { shape: shape.clone(), gamma: self.gamma.unwrap_or(1.0), p0: self.p0.unwrap_or(0.5) };
        if let Some(p) = &self.field {
            c.field = Some(FieldSpec::Path(p.clone()));
        } else if let Some(s) = &self.sinusoidal {
            c.field = Some(FieldSpec::Sinusoidal(builtin(s)));
        } else if let Some(s) = &self.varying_gamma {
            c.field = Some(FieldSpec::VaryingGamma(builtin(s)));
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    match &cli.command {
        Command::Constants(d) => d.apply(&mut c),
        Command::Correction { grid, form, refine, profile, oracle_samples } => {
            grid.apply(&mut c);
            form.apply(&mut c)?;
            if let Some(r) = refine {
                c.correction.refine = r.clone();
            }
            if let Some(p) = profile {
                c.correction.profile_csv = Some(p.clone());
            }
            c.correction.oracle_samples = oracle_samples.unwrap_or(c.correction.oracle_samples);
        }
        Command::Phi { grid, field, form } => {
            grid.apply(&mut c);
            field.apply(&mut c);
            form.apply(&mut c)?;
        }
        Command::Reduce { grid, field } => {
            grid.apply(&mut c);
            field.apply(&mut c);
        }
        Command::Conjecture { grid, samples, resolve } => {
            grid.apply(&mut c);
            c.conjecture.samples = samples.unwrap_or(c.conjecture.samples);
            c.conjecture.resolve |= resolve;
        }
        Command::Expansion { grid, field, terms, deltas, eps, lambda, point, jet_scale, cutoff_radius } => {
            grid.apply(&mut c);
            field.apply(&mut c);
            let e = &mut c.expansion;
            if !terms.is_empty() {
                e.terms = terms.clone();
            }
            if let Some(d) = deltas {
                e.deltas = d.clone();
            }
            if let Some(x) = eps {
                e.eps = x.clone();
            }
            e.lambda = lambda.unwrap_or(e.lambda);
            if field.field.is_none() && field.sinusoidal.is_none() && field.varying_gamma.is_none() {
                e.gamma = field.gamma.unwrap_or(e.gamma);
            }
            e.point = point.unwrap_or(e.point);
            e.jet_scale = jet_scale.unwrap_or(e.jet_scale);
            e.cutoff_radius = cutoff_radius.unwrap_or(e.cutoff_radius);
        }
        Command::Remainder { dim, eps, lambda, cutoff, cutoff_radius } => {
            dim.apply(&mut c);
            let r = &mut c.remainder;
            if let Some(x) = eps {
                r.eps = x.clone();
            }
            r.lambda = lambda.unwrap_or(r.lambda);
            if let Some(k) = cutoff {
                r.cutoff = match k {
                    CutoffArg::Flat => Cutoff::Flat,
                    CutoffArg::Bump => Cutoff::Bump,
                };
            }
            r.cutoff_radius = cutoff_radius.unwrap_or(r.cutoff_radius);
        }
    }
    c.validate()?;
    Ok(c)
}

fn name(c: &Command) -> &'static str {
    match c {
        Command::Constants(_) => "constants",
        Command::Correction { .. } => "correction",
        Command::Phi { .. } => "phi",
        Command::Reduce { .. } => "reduce",
        Command::Conjecture { .. } => "conjecture",
        Command::Expansion { .. } => "expansion",
        Command::Remainder { .. } => "remainder",
    }
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    if let Some(t) = cli.threads {
        // the global pool can only be built once per process
        if rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() && rayon::current_num_threads() != t {
            tracing::warn!("thread pool already running with {} threads", rayon::current_num_threads());
        }
    }
    let cfg = resolve_config(cli)?;
    let outcome = match &cli.command {
        Command::Constants(_) => commands::constants(&cfg),
        Command::Correction { .. } => commands::correction(&cfg),
        Command::Phi { .. } => commands::phi(&cfg),
        Command::Reduce { .. } => commands::reduce(&cfg),
        Command::Conjecture { .. } => commands::conjecture(&cfg),
        Command::Expansion { .. } => commands::expansion(&cfg),
        Command::Remainder { .. } => commands::remainder(&cfg),
    }?;
    for w in &outcome.warnings {
        tracing::warn!("{w}");
    }
    let mut buf = Vec::new();
    let cmd = name(&cli.command);
    match cli.format {
        Format::Json => report::write_json(cmd, &cfg, &outcome, &mut buf)?,
        Format::Csv => report::write_csv(cmd, &cfg, &outcome, &mut buf)?,
    }
    match &cli.out {
        Some(p) => std::fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(&buf)?,
    }
    Ok(outcome.passed())
}

/// Parses `args`, runs the command and returns the process exit code. The report
/// goes to `out` unless `--out` is given; errors go to `err` as one JSON line.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    match run(&cli, out) {
        Ok(true) => 0,
        Ok(false) => EXIT_FAILED_CHECKS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            let _ = writeln!(err, "{}", serde_json::json!({ "error": e.to_string(), "causes": chain }));
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use serde_json::Value;

    use super::run_cli;

    const SMALL: [&str; 4] = ["--n-r", "64", "--n-t", "64"];

    struct Run {
        code: u8,
        stdout: Vec<u8>,
        stderr: Vec<u8>,
    }

    fn run(args: &[&str]) -> Run {
        let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
        let code = run_cli(std::iter::once("boundary-bubble").chain(args.iter().copied()), &mut stdout, &mut stderr);
        Run { code, stdout, stderr }
    }

    fn json_of(o: &Run) -> Value {
        serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
    }

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("boundary-bubble-cli-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d.join(name)
    }

    #[test]
    fn constants_for_n7() {
        let o = run(&["constants", "--n", "7"]);
        assert_eq!(o.code, 0);
        let v = json_of(&o);
        let b = v["result"]["B"].as_f64().unwrap();
        let a = v["result"]["A"].as_f64().unwrap();
        assert!((b - std::f64::consts::PI.powi(3) / 48.0).abs() < 1e-12);
        assert!((a / b - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(v["tool"], "boundary-bubble");
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(v["passed"], true);
    }

    #[test]
    fn constants_csv_has_provenance_line() {
        let o = run(&["--format", "csv", "constants", "--n", "7"]);
        let s = String::from_utf8(o.stdout).unwrap();
        let mut lines = s.lines();
        assert!(lines.next().unwrap().starts_with("# boundary-bubble 0.1.0 command=constants config_hash="));
        assert_eq!(lines.next(), Some("key,value"));
        assert!(s.contains("\nB,6.45964"));
    }

    #[test]
    fn help_and_version_exit_zero() {
        let o = run(&["--version"]);
        assert_eq!(o.code, 0);
        assert!(String::from_utf8_lossy(&o.stdout).contains("0.1.0"));
        assert_eq!(run(&["remainder", "--help"]).code, 0);
    }

    #[test]
    fn invalid_input_exits_with_two() {
        let o = run(&["constants", "--n", "2"]);
        assert_eq!(o.code, 2);
        let err: Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(err["error"].as_str().unwrap().contains("n = 2"));
        let cfg = scratch("bad.json");
        std::fs::write(&cfg, r#"{"n": 7, "grdi": {}}"#).unwrap();
        let o = run(&["--config", cfg.to_str().unwrap(), "constants"]);
        assert_eq!(o.code, 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
        assert_eq!(run(&["expansion", "--term", "I9"]).code, 2);
        assert_eq!(run(&["correction", "--h-diag", "1", "--h-random", "1"]).code, 2);
    }

    #[test]
    fn config_file_and_flags_merge() {
        let cfg = scratch("n8.json");
        std::fs::write(&cfg, r#"{"n": 8, "seed": 3}"#).unwrap();
        let a = json_of(&run(&["--config", cfg.to_str().unwrap(), "constants"]));
        assert_eq!(a["config"]["n"], 8);
        let b = json_of(&run(&["--config", cfg.to_str().unwrap(), "--seed", "4", "constants", "--n", "9"]));
        assert_eq!(b["config"]["n"], 9);
        assert_eq!(b["config"]["seed"], 4);
        assert_ne!(a["config_hash"], b["config_hash"]);
    }

    #[test]
    fn zero_form_gives_zero_scalars() {
        let mut args = vec!["correction", "--h-diag", "0"];
        args.extend(SMALL);
        let o = run(&args);
        assert_eq!(o.code, 0, "{}", String::from_utf8_lossy(&o.stdout));
        let v = json_of(&o);
        for k in ["delta_v_v", "dirichlet", "boundary_quad", "cross_term"] {
            assert_eq!(v["result"]["scalars"][k], 0.0);
        }
        assert!(!v["warnings"].as_array().unwrap().is_empty());
    }

    #[test]
    fn correction_is_deterministic_and_writes_profile() {
        let prof = scratch("profile.csv");
        let out1 = scratch("corr1.json");
        let out2 = scratch("corr2.json");
        for out in [&out1, &out2] {
            let mut args = vec!["--out", out.to_str().unwrap(), "correction", "--h-diag", "0.5", "--profile", prof.to_str().unwrap()];
            args.extend(SMALL);
            let o = run(&args);
            assert!(matches!(o.code, 0 | 1));
            assert!(o.stdout.is_empty());
        }
        let (a, b) = (std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
        assert_eq!(a, b);
        let v: Value = serde_json::from_slice(&a).unwrap();
        assert!(v["result"]["scalars"]["delta_v_v"].as_f64().unwrap() < 0.0);
        let csv = std::fs::read_to_string(&prof).unwrap();
        assert_eq!(csv.lines().next(), Some("r,t,w"));
        assert_eq!(csv.lines().count(), 1 + 64 * 64);
    }

    #[test]
    fn conjecture_csv_is_reproducible() {
        let mut args = vec!["--format", "csv", "conjecture", "--n", "7", "--samples", "5", "--seed", "42"];
        args.extend(SMALL);
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout);
        let s = String::from_utf8(a.stdout).unwrap();
        assert_eq!(s.lines().nth(1), Some("sample,h_norm_sq,phi,ratio"));
        assert_eq!(s.lines().count(), 2 + 5);
    }

    #[test]
    fn reduce_on_sinusoidal_field_picks_smallest_pi() {
        let mut args = vec!["reduce", "--sinusoidal", "8", "--gamma", "1", "--p0", "0.5"];
        args.extend(SMALL);
        let o = run(&args);
        assert_eq!(o.code, 0, "{}", String::from_utf8_lossy(&o.stdout));
        let v = json_of(&o);
        let c = &v["result"]["critical"];
        let q0 = c["q0"].as_u64().unwrap() as usize;
        let points = c["points"].as_array().unwrap();
        let min_pi = points.iter().map(|p| p["pi_norm_sq"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(points[q0]["pi_norm_sq"].as_f64().unwrap(), min_pi);
        assert_eq!(c["classification"], "max");
    }

    #[test]
    fn expansion_i3_within_tolerance() {
        let o = run(&["expansion", "--term", "I3"]);
        assert_eq!(o.code, 0);
        let v = json_of(&o);
        let f = &v["result"]["fits"][0];
        assert_eq!(f["term_id"], "I3");
        assert!(f["rel_err"].as_f64().unwrap() < 0.02);
        let o = run(&["--format", "csv", "expansion", "--term", "I3", "--term", "I5"]);
        let s = String::from_utf8(o.stdout).unwrap();
        assert_eq!(s.lines().nth(1), Some("term_id,delta,value,predicted,fitted_coeff,rel_err,fitted_order"));
        assert_eq!(s.lines().count(), 2 + 8);
    }

    #[test]
    fn remainder_reports_the_failed_slope() {
        let o = run(&["remainder"]);
        assert_eq!(o.code, 1);
        let v = json_of(&o);
        assert_eq!(v["failures"][0]["name"], "slope");
        assert!((v["failures"][0]["value"].as_f64().unwrap() - 3.5).abs() < 0.05);
        assert_eq!(run(&["remainder", "--cutoff", "bump"]).code, 0);
    }
}
