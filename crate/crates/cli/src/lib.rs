//! Batch runner for the action-wave experiments.
//!
//! [`parse_config`] turns a TOML document into an [`ExperimentConfig`],
//! [`run`] executes it and [`RunReport`] renders the result as versioned CSV
//! or JSON.

pub mod config;
pub mod experiments;
pub mod report;

use std::time::Instant;

pub use config::{parse_config, ConfigDraft, ConfigError, Experiment, ExperimentConfig, Format, ParamValue, Scan};
pub use report::{Check, RunReport, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

use report::{JSON_SCHEMA, VERSION};

impl ExperimentConfig {
    /// Re-run the checks [`parse_config`] applies, for configs built in code.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let draft = ConfigDraft {
            experiment: Some(self.experiment.name().to_string()),
            seed: Some(self.seed),
            n_events: Some(self.n_events),
            params: self.params.clone(),
            scan: self.scan.as_ref().map(|s| (s.param.clone(), s.values.iter().map(|v| v.to_string()).collect())),
            ..Default::default()
        };
        draft.finish().map(|_| ())
    }

    fn empty_report(&self) -> RunReport {
        RunReport {
            schema: JSON_SCHEMA.to_string(),
            version: VERSION.to_string(),
            experiment: self.experiment.name().to_string(),
            seed: self.seed,
            n_events: self.n_events,
            params: self.resolved(),
            scan: self.scan.clone(),
            columns: Vec::new(),
            rows: Vec::new(),
            checks: Vec::new(),
            details: serde_json::Value::Null,
            error: None,
            wall_time: Default::default(),
        }
    }
}

/// Execute a configuration, including its scan if it has one.
///
/// Module errors are recorded in [`RunReport::error`]; only an invalid
/// configuration is returned as `Err`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, ConfigError> {
    config.validate()?;
    if let Some(s) = &config.scan {
        return scan(config, &s.param, &s.values);
    }
    let start = Instant::now();
    let mut report = config.empty_report();
    match experiments::execute(config.experiment, &config.resolved(), config.n_events, config.seed) {
        Ok(out) => {
            report.columns = out.columns;
            report.rows = out.rows;
            report.checks = out.checks;
            report.details = out.details;
        }
        Err(e) => {
            report.columns = column_names(config.experiment, None);
            report.error = Some(e.to_string());
        }
    }
    report.wall_time = start.elapsed();
    Ok(report)
}

fn column_names(e: Experiment, scanned: Option<&str>) -> Vec<String> {
    let base = experiments::columns(e);
    let mut out = Vec::with_capacity(base.len() + 1);
    if let Some(p) = scanned {
        if !base.contains(&p) {
            out.push(p.to_string());
        }
    }
    out.extend(base.iter().map(|c| c.to_string()));
    out
}

/// Run once per value of `param`; point `i` uses seed `seed + i`.
///
/// Rows of every point are concatenated, with `param` prepended as a column
/// when the experiment does not already report it. Checks are suffixed with
/// `[param=value]`. A module error stops the scan and keeps earlier rows.
pub fn scan(config: &ExperimentConfig, param: &str, values: &[f64]) -> Result<RunReport, ConfigError> {
    let mut base = config.clone();
    base.scan = Some(Scan { param: param.to_string(), values: values.to_vec() });
    base.validate()?;
    let start = Instant::now();
    let mut report = base.empty_report();
    let prepend = !experiments::columns(config.experiment).contains(&param);
    report.columns = column_names(config.experiment, Some(param));
    let mut points = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let mut params = base.resolved();
        params.insert(param.to_string(), ParamValue::Num(value));
        let seed = config.seed.wrapping_add(i as u64);
        match experiments::execute(config.experiment, &params, config.n_events, seed) {
            Ok(out) => {
                for mut row in out.rows {
                    if prepend {
                        row.insert(0, value);
                    }
                    report.rows.push(row);
                }
                report.checks.extend(out.checks.into_iter().map(|mut c| {
                    c.name = format!("{}[{param}={value}]", c.name);
                    c
                }));
                points.push(serde_json::json!({ "value": value, "seed": seed, "details": out.details }));
            }
            Err(e) => {
                report.error = Some(format!("{param}={value}: {e}"));
                break;
            }
        }
    }
    report.details = serde_json::json!({ "points": points });
    report.wall_time = start.elapsed();
    Ok(report)
}
