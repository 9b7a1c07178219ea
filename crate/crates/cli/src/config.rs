//! Run configuration: a flat TOML document plus command-line overrides.
//!
//! ```toml
//! experiment = "singlet"
//! seed = 7
//! n_events = 1000000
//! format = "csv"          # or "json"
//! out = "singlet.csv"     # stdout when absent
//!
//! [params]
//! theta1 = 0.5
//! theta2 = 0.0
//!
//! [scan]                  # optional; same as --scan delta_theta=0,0.5,1
//! param = "delta_theta"
//! values = [0.0, 0.5, 1.0]
//! ```

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub const DEFAULT_EVENTS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Sg,
    Mz,
    Pair,
    Singlet,
    Chsh,
    Neutrino,
    Schrodinger,
    Dirac,
    Bohm,
    BornConvergence,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Sg,
        Experiment::Mz,
        Experiment::Pair,
        Experiment::Singlet,
        Experiment::Chsh,
        Experiment::Neutrino,
        Experiment::Schrodinger,
        Experiment::Dirac,
        Experiment::Bohm,
        Experiment::BornConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sg => "sg",
            Experiment::Mz => "mz",
            Experiment::Pair => "pair",
            Experiment::Singlet => "singlet",
            Experiment::Chsh => "chsh",
            Experiment::Neutrino => "neutrino",
            Experiment::Schrodinger => "schrodinger",
            Experiment::Dirac => "dirac",
            Experiment::Bohm => "bohm",
            Experiment::BornConvergence => "born-convergence",
        }
    }

    pub fn params(self) -> &'static [ParamSpec] {
        use ParamDefault::*;
        use ParamKind::*;
        const fn p(name: &'static str, kind: ParamKind, default: ParamDefault) -> ParamSpec {
            ParamSpec { name, kind, default }
        }
        match self {
            Experiment::Sg => {
                const L: &[ParamSpec] = &[
                    p("phase", Num, Value(PI)),
                    p("mu_b", Num, Optional),
                    p("t", Num, Optional),
                    p("hbar", Num, Value(1.0)),
                    p("input", Text(&["x+", "x-"]), Word("x+")),
                ];
                L
            }
            Experiment::Mz => {
                const L: &[ParamSpec] = &[
                    p("phi1", Num, Value(0.0)),
                    p("phi2", Num, Value(0.0)),
                    p("transmission", Num, Value(FRAC_1_SQRT_2)),
                ];
                L
            }
            Experiment::Pair => {
                const L: &[ParamSpec] = &[
                    p("delta_k", Num, Value(1.0)),
                    p("source_extent", Num, Optional),
                    p("y1", Num, Value(0.0)),
                    p("mixing", Num, Value(0.0)),
                    p("points", Num, Value(8.0)),
                ];
                L
            }
            Experiment::Singlet => {
                const L: &[ParamSpec] = &[
                    p("theta1", Num, RequiredUnless("delta_theta")),
                    p("theta2", Num, Value(0.0)),
                    p("delta_theta", Num, Optional),
                    p("delta_s", Num, Value(1.0)),
                ];
                L
            }
            Experiment::Chsh => {
                const L: &[ParamSpec] = &[
                    p("a", Num, Value(0.0)),
                    p("a_prime", Num, Value(FRAC_PI_2)),
                    p("b", Num, Value(FRAC_PI_4)),
                    p("b_prime", Num, Value(3.0 * FRAC_PI_4)),
                    p("delta_s", Num, Value(1.0)),
                ];
                L
            }
            Experiment::Neutrino => {
                const L: &[ParamSpec] = &[
                    p("theta", Num, Value(FRAC_PI_4)),
                    p("phase", Num, Optional),
                    p("omega1", Num, Optional),
                    p("omega2", Num, Optional),
                    p("t", Num, Optional),
                    p("delta_m2", Num, Optional),
                    p("energy", Num, Optional),
                    p("length", Num, Optional),
                    p("c_light", Num, Value(1.0)),
                    p("hbar", Num, Value(1.0)),
                ];
                L
            }
            Experiment::Schrodinger => {
                const L: &[ParamSpec] = &[
                    p("potential", Text(&["free", "harmonic"]), Word("free")),
                    p("omega", Num, Value(1.0)),
                    p("sigma0", Num, Value(1.0)),
                    p("x0", Num, Value(0.0)),
                    p("k0", Num, Value(0.0)),
                    p("beta", Num, Value(0.0)),
                    p("mass", Num, Value(1.0)),
                    p("hbar", Num, Value(1.0)),
                    p("t", Num, Value(1.0)),
                    p("steps", Num, Value(1000.0)),
                    p("n_points", Num, Value(1024.0)),
                    p("x_min", Num, Value(-20.0)),
                    p("x_max", Num, Value(20.0)),
                ];
                L
            }
            Experiment::Dirac => {
                const L: &[ParamSpec] = &[
                    p("omega", Num, Value(1.0)),
                    p("bx", Num, Value(0.0)),
                    p("by", Num, Value(0.0)),
                    p("bz", Num, Value(0.0)),
                    p("mu0", Num, Value(1.0)),
                    p("hbar", Num, Value(1.0)),
                    p("t", Num, Value(FRAC_PI_4)),
                ];
                L
            }
            Experiment::Bohm => {
                const L: &[ParamSpec] = &[
                    p("a", Num, Value(1.0)),
                    p("half_width", Num, Optional),
                    p("mass", Num, Value(1.0)),
                    p("hbar", Num, Value(1.0)),
                    p("samples", Num, Value(1000.0)),
                ];
                L
            }
            Experiment::BornConvergence => {
                const L: &[ParamSpec] = &[
                    p("n_min", Num, Value(1e3)),
                    p("n_max", Num, Value(1e6)),
                    p("per_decade", Num, Value(2.0)),
                    p("replicates", Num, Value(16.0)),
                ];
                L
            }
        }
    }

    pub fn spec(self, name: &str) -> Option<&'static ParamSpec> {
        self.params().iter().find(|p| p.name == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Num,
    Text(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDefault {
    Value(f64),
    Word(&'static str),
    Optional,
    Required,
    /// Required unless the named parameter is given.
    RequiredUnless(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub default: ParamDefault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub param: String,
    pub values: Vec<f64>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Values given by the user; defaults are applied by [`Self::resolved`].
    pub params: BTreeMap<String, ParamValue>,
    pub n_events: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub scan: Option<Scan>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            params: BTreeMap::new(),
            n_events: DEFAULT_EVENTS,
            seed: 0,
            out: None,
            format: Format::Csv,
            scan: None,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), ParamValue::Num(value));
        self
    }

    /// Every parameter with a value, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, ParamValue> {
        let mut out = BTreeMap::new();
        for spec in self.experiment.params() {
            let value = self.params.get(spec.name).cloned().or(match spec.default {
                ParamDefault::Value(v) => Some(ParamValue::Num(v)),
                ParamDefault::Word(w) => Some(ParamValue::Text(w.to_string())),
                _ => None,
            });
            if let Some(v) = value {
                out.insert(spec.name.to_string(), v);
            }
        }
        out
    }
}

/// One problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, key `{}`: {}", self.key, self.message),
            None => write!(f, "key `{}`: {}", self.key, self.message),
        }
    }
}

/// All violations found while validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn single(key: &str, message: impl Into<String>) -> Self {
        Self { violations: vec![Violation { key: key.to_string(), line: None, message: message.into() }] }
    }

    pub fn mentions(&self, key: &str) -> bool {
        self.violations.iter().any(|v| v.key == key || v.message.contains(key))
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&lines.join("\n"))
    }
}

/// Partially parsed configuration, open to command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigDraft {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub n_events: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub params: BTreeMap<String, ParamValue>,
    /// Scan target and its raw values.
    pub scan: Option<(String, Vec<String>)>,
    pub(crate) source: String,
    pub(crate) violations: Vec<Violation>,
}

/// 1-based line of `key = ...`, looked up inside `section` (`""` for the top
/// level).
fn key_line(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn toml_type(v: &toml::Value) -> &'static str {
    match v {
        toml::Value::String(_) => "string",
        toml::Value::Integer(_) => "integer",
        toml::Value::Float(_) => "float",
        toml::Value::Boolean(_) => "boolean",
        toml::Value::Datetime(_) => "datetime",
        toml::Value::Array(_) => "array",
        toml::Value::Table(_) => "table",
    }
}

fn number(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(f) => Some(*f),
        _ => None,
    }
}

impl ConfigDraft {
    pub fn from_toml(text: &str) -> Self {
        let mut d = ConfigDraft { source: text.to_string(), ..Default::default() };
        let table: toml::Table = match text.parse() {
            Ok(t) => t,
            Err(e) => {
                let e: toml::de::Error = e;
                let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
                d.violations.push(Violation { key: "<syntax>".to_string(), line, message: e.message().to_string() });
                return d;
            }
        };
        for (key, value) in &table {
            match (key.as_str(), value) {
                ("experiment", toml::Value::String(s)) => d.experiment = Some(s.clone()),
                ("format", toml::Value::String(s)) => d.format = Some(s.clone()),
                ("out", toml::Value::String(s)) => d.out = Some(PathBuf::from(s)),
                ("seed", toml::Value::Integer(i)) if *i >= 0 => d.seed = Some(*i as u64),
                ("n_events", toml::Value::Integer(i)) if *i >= 1 => d.n_events = Some(*i as u64),
                ("seed" | "n_events", v) => d.push_top(key, format!("expected a positive integer, got {}", show(v))),
                ("experiment" | "format" | "out", v) => {
                    d.push_top(key, format!("expected a string, got {}", toml_type(v)))
                }
                ("params", toml::Value::Table(t)) => {
                    for (k, v) in t {
                        match v {
                            toml::Value::String(s) => {
                                d.params.insert(k.clone(), ParamValue::Text(s.clone()));
                            }
                            v => match number(v) {
                                Some(x) => {
                                    d.params.insert(k.clone(), ParamValue::Num(x));
                                }
                                None => d.push_in("params", k, format!("expected a number, got {}", toml_type(v))),
                            },
                        }
                    }
                }
                ("scan", toml::Value::Table(t)) => d.read_scan(t),
                (_, v) => d.push_top(key, format!("unknown key ({})", toml_type(v))),
            }
        }
        d
    }

    fn read_scan(&mut self, t: &toml::Table) {
        let param = match t.get("param") {
            Some(toml::Value::String(s)) => s.clone(),
            _ => {
                self.push_in("scan", "param", "expected the name of a parameter");
                return;
            }
        };
        let values = match t.get("values") {
            Some(toml::Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => s.clone(),
                    v => number(v).map(|x| x.to_string()).unwrap_or_else(|| show(v)),
                })
                .collect(),
            None => Vec::new(),
            Some(v) => {
                self.push_in("scan", "values", format!("expected an array, got {}", toml_type(v)));
                return;
            }
        };
        self.scan = Some((param, values));
    }

    fn push_top(&mut self, key: &str, message: String) {
        let line = key_line(&self.source, "", key);
        self.violations.push(Violation { key: key.to_string(), line, message });
    }

    fn push_in(&mut self, section: &str, key: &str, message: impl Into<String>) {
        let line = key_line(&self.source, section, key);
        self.violations.push(Violation { key: key.to_string(), line, message: message.into() });
    }

    /// Parse `param=v1,v2,...`.
    pub fn set_scan_arg(&mut self, arg: &str) {
        match arg.split_once('=') {
            Some((param, list)) => {
                let values = list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
                self.scan = Some((param.trim().to_string(), values));
            }
            None => self.violations.push(Violation {
                key: "scan".to_string(),
                line: None,
                message: format!("expected param=v1,v2,..., got `{arg}`"),
            }),
        }
    }

    pub fn finish(mut self) -> Result<ExperimentConfig, ConfigError> {
        let experiment = match self.experiment.as_deref() {
            Some(name) => match name.parse::<Experiment>() {
                Ok(e) => Some(e),
                Err(msg) => {
                    self.push_top("experiment", msg);
                    None
                }
            },
            None => {
                self.push_top("experiment", "missing; set it in the config or with --experiment".into());
                None
            }
        };
        let format = match self.format.as_deref().map(str::parse::<Format>) {
            None => Format::Csv,
            Some(Ok(f)) => f,
            Some(Err(msg)) => {
                self.push_top("format", msg);
                Format::Csv
            }
        };
        if self.n_events == Some(0) {
            self.push_top("n_events", "must be at least 1".into());
        }
        let mut scan = None;
        if let Some(e) = experiment {
            self.check_params(e);
            scan = self.check_scan(e);
        }
        if !self.violations.is_empty() {
            return Err(ConfigError { violations: self.violations });
        }
        Ok(ExperimentConfig {
            experiment: experiment.expect("no violations"),
            params: self.params,
            n_events: self.n_events.unwrap_or(DEFAULT_EVENTS),
            seed: self.seed.unwrap_or(0),
            out: self.out,
            format,
            scan,
        })
    }

    fn check_params(&mut self, e: Experiment) {
        let scanned = self.scan.as_ref().map(|s| s.0.clone());
        let given = |name: &str, params: &BTreeMap<String, ParamValue>| {
            params.contains_key(name) || scanned.as_deref() == Some(name)
        };
        let params = self.params.clone();
        for (key, value) in &params {
            match e.spec(key) {
                None => self.push_in("params", key, format!("unknown parameter for `{e}`")),
                Some(spec) => match (spec.kind, value) {
                    (ParamKind::Num, ParamValue::Num(x)) if !x.is_finite() => {
                        self.push_in("params", key, "must be finite")
                    }
                    (ParamKind::Num, ParamValue::Num(_)) => {}
                    (ParamKind::Num, ParamValue::Text(s)) => {
                        self.push_in("params", key, format!("expected a number, got \"{s}\""))
                    }
                    (ParamKind::Text(allowed), ParamValue::Text(s)) if allowed.contains(&s.as_str()) => {}
                    (ParamKind::Text(allowed), v) => self.push_in(
                        "params",
                        key,
                        format!("expected one of {}, got {}", allowed.join(", "), show_param(v)),
                    ),
                },
            }
        }
        for spec in e.params() {
            let missing = match spec.default {
                ParamDefault::Required => !given(spec.name, &params),
                ParamDefault::RequiredUnless(other) => !given(spec.name, &params) && !given(other, &params),
                _ => false,
            };
            if missing {
                let hint = match spec.default {
                    ParamDefault::RequiredUnless(other) => format!(" (or `{other}`)"),
                    _ => String::new(),
                };
                self.violations.push(Violation {
                    key: spec.name.to_string(),
                    line: None,
                    message: format!("missing required parameter `{}`{hint} for `{e}`", spec.name),
                });
            }
        }
    }

    fn check_scan(&mut self, e: Experiment) -> Option<Scan> {
        let (param, raw) = self.scan.clone()?;
        match e.spec(&param) {
            Some(spec) if spec.kind == ParamKind::Num => {}
            _ => {
                self.push_in("scan", "param", format!("scan target `{param}` is not a numeric parameter of `{e}`"));
                return None;
            }
        }
        let mut values = Vec::with_capacity(raw.len());
        for v in raw {
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() => values.push(x),
                _ => self.push_in("scan", "values", format!("scan value `{v}` for `{param}` is not a finite number")),
            }
        }
        Some(Scan { param, values })
    }
}

fn show(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => format!("\"{s}\""),
        v => v.to_string(),
    }
}

fn show_param(v: &ParamValue) -> String {
    match v {
        ParamValue::Num(x) => x.to_string(),
        ParamValue::Text(s) => format!("\"{s}\""),
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    ConfigDraft::from_toml(text).finish()
}
