use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::Command;

use actionwave_cli::{
    parse_config, run, scan, Experiment, ExperimentConfig, Format, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME,
};

const BIN: &str = env!("CARGO_BIN_EXE_actionwave");

fn actionwave(args: &[&str], threads: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("ACTIONWAVE_THREADS", t),
        None => cmd.env_remove("ACTIONWAVE_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn parse_examples() {
    let c = parse_config("experiment = \"sg\"\n").unwrap();
    assert_eq!(c.experiment, Experiment::Sg);
    assert_eq!(c.format, Format::Csv);

    let e = parse_config("experiment = \"unknown\"\n").unwrap_err();
    assert_eq!(e.violations[0].key, "experiment");
    assert_eq!(e.violations[0].line, Some(1));

    let e = parse_config("experiment = \"singlet\"\n[params]\ntheta2 = 0.5\n").unwrap_err();
    assert!(e.to_string().contains("theta1"), "{e}");

    let e = parse_config("experiment = \"sg\"\n[params]\nphase = \"half\"\n").unwrap_err();
    assert_eq!(e.violations[0].key, "phase");
    assert_eq!(e.violations[0].line, Some(3));
}

#[test]
fn sg_deterministic_port() {
    let c = ExperimentConfig { n_events: 100_000, ..ExperimentConfig::new(Experiment::Sg) }.with_param("phase", PI);
    let r = run(&c).unwrap();
    assert_eq!(r.column("frequency").unwrap(), vec![1.0]);
    assert_eq!(r.column("std_err").unwrap(), vec![0.0]);
    assert_eq!(r.exit_code(), EXIT_OK);

    let r = run(&c.clone().with_param("phase", 0.0)).unwrap();
    assert_eq!(r.column("frequency").unwrap(), vec![0.0]);
}

#[test]
fn chsh_report_s() {
    let c = ExperimentConfig { n_events: 1_000_000, seed: 11, ..ExperimentConfig::new(Experiment::Chsh) };
    let r = run(&c).unwrap();
    let s = r.column("S").unwrap()[0];
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 0.01, "{s}");
    assert!((r.column("S_analytic").unwrap()[0] - 2.8284271247461903).abs() < 1e-12);
    assert!(r.checks.iter().all(|c| c.passed), "{:?}", r.checks);
}

#[test]
fn singlet_scan_17_points() {
    let base = ExperimentConfig { n_events: 20_000, seed: 5, ..ExperimentConfig::new(Experiment::Singlet) };
    let values: Vec<f64> = (0..17).map(|j| PI * j as f64 / 16.0).collect();
    let r = scan(&base, "delta_theta", &values).unwrap();
    assert_eq!(r.rows.len(), 17);
    assert_eq!(r.columns[0], "delta_theta");
    for (d, c) in r.column("delta_theta").unwrap().iter().zip(r.column("C_analytic").unwrap()) {
        assert!((c + d.cos()).abs() < 1e-12);
    }
    assert!(r.column("N").unwrap().iter().all(|&n| n == 20_000.0));
    assert_eq!(r.exit_code(), EXIT_OK, "{:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
}

#[test]
fn neutrino_phase_scan() {
    let theta = FRAC_PI_4 / 2.0;
    let base =
        ExperimentConfig { n_events: 10_000, ..ExperimentConfig::new(Experiment::Neutrino) }.with_param("theta", theta);
    let phases = [0.0, 0.4, FRAC_PI_2, 2.0, PI];
    let r = scan(&base, "phase", &phases).unwrap();
    assert_eq!(r.rows.len(), phases.len());
    for (phi, p) in phases.iter().zip(r.column("P_emu").unwrap()) {
        let expected = (2.0 * theta).sin().powi(2) * phi.sin().powi(2);
        assert!((p - expected).abs() < 1e-12);
    }
}

#[test]
fn empty_scan_succeeds() {
    let base = ExperimentConfig::new(Experiment::Neutrino);
    let r = scan(&base, "phase", &[]).unwrap();
    assert!(r.rows.is_empty());
    assert_eq!(r.columns[0], "phase");
    assert_eq!(r.exit_code(), EXIT_OK);

    let out = actionwave(&["--experiment", "sg", "--scan", "phase="], None);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1, "{text}");
}

#[test]
fn scan_rejects_non_numeric_target() {
    let base = ExperimentConfig::new(Experiment::Sg);
    assert!(scan(&base, "input", &[1.0]).unwrap_err().mentions("input"));
    assert!(scan(&base, "nonexistent", &[1.0]).is_err());
}

#[test]
fn runtime_error_is_serialized() {
    let c = ExperimentConfig::new(Experiment::Bohm).with_param("half_width", 3.0);
    let r = run(&c).unwrap();
    assert!(r.error.as_deref().unwrap().contains("half_width"));
    assert_eq!(r.exit_code(), EXIT_RUNTIME);
    assert!(r.to_json().contains("\"error\": \"invalid parameter"));
}

#[test]
fn exit_codes_from_binary() {
    let dir = tempfile::tempdir().unwrap();

    let out = actionwave(&["--experiment", "unknown"], None);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));

    let cfg = write(dir.path(), "bad.toml", "experiment = \"sg\"\nseed = = 2\n");
    let out = actionwave(&["--config", &cfg], None);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = actionwave(&["--experiment", "sg", "--events", "0"], None);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));

    let cfg = write(dir.path(), "box.toml", "experiment = \"bohm\"\n[params]\nhalf_width = 3.0\n");
    let dest = dir.path().join("box.json");
    let out = actionwave(&["--config", &cfg, "--format", "json", "--out", dest.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(EXIT_RUNTIME));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert!(v["error"].as_str().unwrap().contains("half_width"));

    // a periodic box far too small for the spreading packet
    let cfg = write(
        dir.path(),
        "wrap.toml",
        "experiment = \"schrodinger\"\n[params]\nx_min = -4.0\nx_max = 4.0\nn_points = 128\nt = 20.0\n",
    );
    let out = actionwave(&["--config", &cfg], None);
    assert_eq!(out.status.code(), Some(EXIT_CHECK));
    assert!(String::from_utf8_lossy(&out.stdout).contains("# check schrodinger.width FAIL"));

    let out = actionwave(&["--help"], None);
    assert_eq!(out.status.code(), Some(EXIT_OK));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sg.toml",
        "experiment = \"sg\"\nseed = 1\nn_events = 50\nformat = \"csv\"\n[params]\nphase = 1.0\n",
    );
    let out = actionwave(&["--config", &cfg, "--events", "70", "--seed", "9", "--format", "json"], None);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "actionwave.run/1");
    assert_eq!(v["n_events"], 70);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["params"]["phase"], 1.0);
    assert_eq!(v["rows"][0][4], 70.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "singlet.toml",
        "experiment = \"singlet\"\nseed = 42\nn_events = 30000\n[params]\ntheta2 = 0.25\n\
         [scan]\nparam = \"delta_theta\"\nvalues = [0.0, 0.5, 1.0, 2.0]\n",
    );
    let mut outputs = Vec::new();
    for (i, threads) in [None, Some("1"), Some("3"), Some("0")].into_iter().enumerate() {
        let dest = dir.path().join(format!("run{i}.csv"));
        let out = actionwave(&["--config", &cfg, "--out", dest.to_str().unwrap()], threads);
        assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&dest).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 5, "only the config and four outputs remain");
}
