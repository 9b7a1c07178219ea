use clap::Parser;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use actionwave_cli::report::write_atomic;
use actionwave_cli::{run, ConfigDraft, EXIT_CONFIG, EXIT_RUNTIME};

/// Run an action-wave experiment and emit its results as CSV or JSON.
#[derive(Debug, Parser)]
#[command(name = "actionwave", version)]
struct Args {
    /// sg, mz, pair, singlet, chsh, neutrino, schrodinger, dirac, bohm or
    /// born-convergence.
    #[arg(long)]
    experiment: Option<String>,
    /// TOML configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Events per ensemble.
    #[arg(long)]
    events: Option<u64>,
    /// Output file, written atomically; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Scan one numeric parameter: `name=v1,v2,...`.
    #[arg(long)]
    scan: Option<String>,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("ACTIONWAVE_THREADS") else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().map_err(|_| format!("ACTIONWAVE_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }

    let mut draft = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => ConfigDraft::from_toml(&text),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => ConfigDraft::default(),
    };
    if args.experiment.is_some() {
        draft.experiment = args.experiment;
    }
    if args.seed.is_some() {
        draft.seed = args.seed;
    }
    if args.events.is_some() {
        draft.n_events = args.events;
    }
    if args.out.is_some() {
        draft.out = args.out;
    }
    if args.format.is_some() {
        draft.format = args.format;
    }
    if let Some(s) = &args.scan {
        draft.set_scan_arg(s);
    }

    let config = match draft.finish() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error:\n{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("configuration error:\n{e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };

    let text = report.render(config.format);
    let written = match &config.out {
        Some(path) => write_atomic(path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_RUNTIME as u8);
    }

    eprintln!(
        "{}: {} rows, {} checks, wall time {:.3} s",
        report.experiment,
        report.rows.len(),
        report.checks.len(),
        report.wall_time.as_secs_f64()
    );
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} (residual {:e}, tolerance {:e})", c.name, c.residual, c.tolerance);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    ExitCode::from(report.exit_code() as u8)
}
