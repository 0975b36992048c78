use std::io::Write;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;

pub const TOOL: &str = "boundary-bubble";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One declared tolerance and how the run did against it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// |value| ≤ tol
    pub fn below(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: tol, passed: value.abs() <= tol }
    }

    /// |value − target| ≤ tol; `value` is reported as given.
    pub fn near(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: tol, passed: (value - target).abs() <= tol }
    }

    pub fn nonpositive(name: &str, value: f64, tol: f64) -> Self {
        Self { name: name.into(), value, tolerance: tol, passed: value <= tol }
    }
}

/// Command output before it is wrapped in the envelope.
pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// tabular form for `--format csv`
    pub table: Table,
}

pub enum Table {
    KeyValues(Vec<(String, f64)>),
    Csv(Vec<u8>),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_hash: String,
    config: &'a RunConfig,
    passed: bool,
    failures: Vec<&'a Check>,
    checks: &'a [Check],
    warnings: &'a [String],
    result: &'a Value,
}

pub fn write_json<W: Write>(command: &str, cfg: &RunConfig, o: &Outcome, mut out: W) -> Result<()> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        config_hash: cfg.hash(),
        config: cfg,
        passed: o.passed(),
        failures: o.checks.iter().filter(|c| !c.passed).collect(),
        checks: &o.checks,
        warnings: &o.warnings,
        result: &o.result,
    };
    out.write_all(boundary_bubble::report::to_json(&env)?.as_bytes())?;
    Ok(())
}

/// The table, preceded by one `#` line carrying the tool version and config hash.
pub fn write_csv<W: Write>(command: &str, cfg: &RunConfig, o: &Outcome, mut out: W) -> Result<()> {
    writeln!(out, "# {TOOL} {VERSION} command={command} config_hash={} passed={}", cfg.hash(), o.passed())?;
    match &o.table {
        Table::KeyValues(kv) => boundary_bubble::report::write_key_values(kv, out)?,
        Table::Csv(bytes) => out.write_all(bytes)?,
    }
    Ok(())
}
