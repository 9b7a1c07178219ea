//! Run reports and their CSV/JSON serialization.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

use crate::config::{Format, ParamValue, Scan};

pub const JSON_SCHEMA: &str = "actionwave.run/1";
pub const CSV_VERSION: &str = "actionwave csv v1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named invariant check with its residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `residual <= tolerance`.
    pub fn within(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), passed: residual <= tolerance, residual, tolerance }
    }

    /// Monte Carlo agreement: `|empirical - analytic| <= k σ`, or exact
    /// equality when `σ = 0`.
    pub fn sigma(name: impl Into<String>, empirical: f64, analytic: f64, std_err: f64, k: f64) -> Self {
        Self::within(name, (empirical - analytic).abs(), k * std_err)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub n_events: u64,
    /// Parameters after defaults were applied.
    pub params: BTreeMap<String, ParamValue>,
    pub scan: Option<Scan>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    pub error: Option<String>,
    /// Reported on stderr only, so output files stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            EXIT_RUNTIME
        } else if self.checks.iter().any(|c| !c.passed) {
            EXIT_CHECK
        } else {
            EXIT_OK
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Header comments, a column line, one line per row, then one comment per
    /// check and the error if any.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# {CSV_VERSION} experiment={} seed={} n_events={} version={}",
            self.experiment, self.seed, self.n_events, self.version
        );
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| match v {
                ParamValue::Num(x) => format!("{k}={x}"),
                ParamValue::Text(t) => format!("{k}={t}"),
            })
            .collect();
        let _ = writeln!(s, "# params {}", params.join(" "));
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "# check {} {} residual={} tolerance={}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.residual,
                c.tolerance
            );
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "# error {e}");
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Write `contents` to `path` through a temporary file in the same directory
/// and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
