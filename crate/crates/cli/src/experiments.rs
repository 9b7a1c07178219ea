//! Experiment dispatch: resolved parameters in, table rows and checks out.

use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use actionwave_core::bohm_compare::{bohm_velocity, quantum_potential, rqm_momentum_model, BoxState};
use actionwave_core::correlations::{
    lhv_baseline_correlation, simulate_chsh, simulate_lhv, simulate_pair_visibility, simulate_singlet,
    singlet_correlation, visibility_with_mixing, ChshSettings, PairSourceConfig, SingletConfig,
};
use actionwave_core::dirac_form::{
    build_hamiltonian, component_ratio, component_ratio_fit, hermiticity_defect, simulate_tunneling, spectrum,
    split_energy, tunneling_evolution, verify_clifford, DiracFormConfig, WELL_LABELS,
};
use actionwave_core::engine::{binomial_std_error, geometric_ladder};
use actionwave_core::interferometry::{
    mz_exit_probability, sg_transition_probability, simulate_mz, simulate_sg, MzConfig, SgConfig, SgInput,
};
use actionwave_core::neutrino::{appearance_from_phase, NeutrinoConfig, NeutrinoModel};
use actionwave_core::rng::EventKey;
use actionwave_core::schrodinger::{
    energy, evolve, free_gaussian_width, gaussian_packet, madelung_decompose, term_decomposition_residual, Grid1D,
    HybridWavefunction, PotentialField,
};
use actionwave_core::{born_convergence, BranchPipeline, BranchSet, Complex64, Error, PhysConstants, Result};

use crate::config::{Experiment, ParamValue};
use crate::report::Check;

/// Monte Carlo checks pass within this many standard errors.
pub const SIGMA_LEVEL: f64 = 5.0;

/// Table and checks produced by one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

/// CSV columns of each experiment, in output order.
pub fn columns(e: Experiment) -> &'static [&'static str] {
    match e {
        Experiment::Sg => &["phase", "p_analytic", "frequency", "std_err", "N"],
        Experiment::Mz => &["phi1", "phi2", "p1_analytic", "p2_analytic", "freq1", "freq2", "std_err", "N"],
        Experiment::Pair => &[
            "offset",
            "coincidence_analytic",
            "coincidence",
            "coincidence_std_err",
            "single_analytic",
            "single",
            "single_std_err",
            "N",
        ],
        Experiment::Singlet => {
            &["delta_theta", "C_analytic", "C_empirical", "std_err", "N", "P1_plus", "P1_plus_std_err"]
        }
        Experiment::Chsh => &["S_analytic", "S", "S_std_err", "S_lhv_analytic", "S_lhv", "S_lhv_std_err", "N"],
        Experiment::Neutrino => &["phase", "P_ee", "P_emu", "freq_e", "freq_mu", "std_err", "N"],
        Experiment::Schrodinger => &["x", "re", "im", "A", "S"],
        Experiment::Dirac => {
            &["E1", "E2", "E3", "E4", "E_analytic", "clifford_residual", "p_swap_analytic", "freq_swap", "std_err", "N"]
        }
        Experiment::Bohm => {
            &["a", "momentum", "freq_plus", "std_err", "mean_momentum", "mean_std_err", "N", "max_abs_velocity"]
        }
        Experiment::BornConvergence => &["N", "max_error", "replicates"],
    }
}

pub fn execute(e: Experiment, params: &BTreeMap<String, ParamValue>, n: u64, seed: u64) -> Result<Outcome> {
    let p = Params(params);
    let (rows, checks, details) = match e {
        Experiment::Sg => sg(&p, n, seed)?,
        Experiment::Mz => mz(&p, n, seed)?,
        Experiment::Pair => pair(&p, n, seed)?,
        Experiment::Singlet => singlet(&p, n, seed)?,
        Experiment::Chsh => chsh(&p, n, seed)?,
        Experiment::Neutrino => neutrino(&p, n, seed)?,
        Experiment::Schrodinger => schrodinger(&p)?,
        Experiment::Dirac => dirac(&p, n, seed)?,
        Experiment::Bohm => bohm(&p, n, seed)?,
        Experiment::BornConvergence => born(&p, seed)?,
    };
    Ok(Outcome { columns: columns(e).iter().map(|c| c.to_string()).collect(), rows, checks, details })
}

type Parts = (Vec<Vec<f64>>, Vec<Check>, serde_json::Value);

struct Params<'a>(&'a BTreeMap<String, ParamValue>);

impl Params<'_> {
    fn opt(&self, name: &str) -> Option<f64> {
        match self.0.get(name) {
            Some(ParamValue::Num(x)) => Some(*x),
            _ => None,
        }
    }

    fn num(&self, name: &'static str) -> Result<f64> {
        self.opt(name).ok_or(Error::InvalidParameter { name, reason: "missing".into() })
    }

    fn text(&self, name: &str) -> Option<&str> {
        match self.0.get(name) {
            Some(ParamValue::Text(s)) => Some(s),
            _ => None,
        }
    }

    /// A non-negative integer given as a number.
    fn count(&self, name: &'static str) -> Result<u64> {
        let x = self.num(name)?;
        if !(x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53)) {
            return Err(Error::InvalidParameter { name, reason: format!("expected a non-negative integer, got {x}") });
        }
        Ok(x as u64)
    }

    fn constants(&self) -> Result<PhysConstants> {
        PhysConstants::new(self.num("hbar")?, self.opt("mass").unwrap_or(1.0))
    }
}

fn bad(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

fn sg(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let input: SgInput = p.text("input").unwrap_or("x+").parse()?;
    let hbar = p.num("hbar")?;
    let config = match p.opt("mu_b") {
        Some(mu_b) => SgConfig { mu_b, t: p.opt("t").unwrap_or(1.0), input, hbar },
        None => SgConfig { mu_b: 0.5 * p.num("phase")? * hbar, t: 1.0, input, hbar },
    };
    let stats = simulate_sg(&config, n, seed)?;
    let analytic = sg_transition_probability(&config);
    let freq = stats.frequency(input.flipped().label());
    let check = Check::sigma("sg.transition", freq, analytic, binomial_std_error(analytic, n), SIGMA_LEVEL);
    let row = vec![config.relative_phase(), analytic, freq, binomial_std_error(freq, n), n as f64];
    Ok((vec![row], vec![check], json!({ "counts": stats })))
}

fn mz(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let t = p.num("transmission")?;
    if !(0.0..=1.0).contains(&t) {
        return Err(bad("transmission", format!("must lie in [0, 1], got {t}")));
    }
    let config = MzConfig { phi1: p.num("phi1")?, phi2: p.num("phi2")?, splitter: (t, (1.0 - t * t).sqrt()) };
    let stats = simulate_mz(&config, n, seed)?;
    let (p1, p2) = mz_exit_probability(&config);
    let f = stats.frequencies();
    let check = Check::sigma("mz.port1", f[0], p1, binomial_std_error(p1, n), SIGMA_LEVEL);
    let row = vec![config.phi1, config.phi2, p1, p2, f[0], f[1], binomial_std_error(f[0], n), n as f64];
    Ok((vec![row], vec![check], json!({ "counts": stats })))
}

/// `sin(u)/u`, one at zero.
fn sinc(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.sin() / u
    }
}

/// Exact `P(++)` and detector-1 `P(+)` for a source uniform over the extent.
fn pair_analytic(c: &PairSourceConfig, q: f64) -> (f64, f64) {
    let k = c.delta_k;
    let u = 0.5 * k * c.source_extent;
    // source averages of cos(k(y - y_s)) and cos(k(y1 + y2 - 2 y_s))
    let g1 = |y: f64| (k * y).cos() * sinc(u);
    let g2 = (k * (c.y1 + c.y2)).cos() * sinc(2.0 * u);
    let d = (k * (c.y1 - c.y2)).cos();
    let single = 0.5 * (1.0 + g1(c.y1));
    let paired = single * 0.5 * (1.0 + d);
    let unpaired = 0.25 * (1.0 + g1(c.y1) + g1(c.y2) + 0.5 * (d + g2));
    ((1.0 - q) * paired + q * unpaired, single)
}

fn pair(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let delta_k = p.num("delta_k")?;
    let y1 = p.num("y1")?;
    let mixing = p.num("mixing")?;
    let source =
        PairSourceConfig { delta_k, source_extent: p.opt("source_extent").unwrap_or(20.0 * PI / delta_k), y1, y2: y1 };
    let points = p.count("points")? as usize;
    let vis = simulate_pair_visibility(&source, mixing, points, n, seed)?;
    let mut rows = Vec::with_capacity(points);
    let mut checks = Vec::new();
    for (j, (&(y2, coinc), &(y1_scan, single))) in vis.coincidence_rates.iter().zip(&vis.single_rates).enumerate() {
        let (coinc_analytic, _) = pair_analytic(&PairSourceConfig { y2, ..source }, mixing);
        let (_, single_analytic) = pair_analytic(&PairSourceConfig { y1: y1_scan, ..source }, mixing);
        checks.push(Check::sigma(
            format!("pair.coincidence[{j}]"),
            coinc,
            coinc_analytic,
            binomial_std_error(coinc_analytic, n),
            SIGMA_LEVEL,
        ));
        checks.push(Check::sigma(
            format!("pair.single[{j}]"),
            single,
            single_analytic,
            binomial_std_error(single_analytic, n),
            SIGMA_LEVEL,
        ));
        rows.push(vec![
            y2 - y1,
            coinc_analytic,
            coinc,
            binomial_std_error(coinc, n),
            single_analytic,
            single,
            binomial_std_error(single, n),
            n as f64,
        ]);
    }
    let details = json!({
        "coincidence_visibility": vis.coincidence_visibility,
        "single_visibility": vis.single_visibility,
        "visibility_with_mixing": visibility_with_mixing(mixing, &source)?,
        "source_extent": source.source_extent,
        "fringe_period": source.fringe_period(),
    });
    Ok((rows, checks, details))
}

fn singlet_config(p: &Params) -> Result<SingletConfig> {
    let theta2 = p.num("theta2")?;
    let theta1 = match (p.opt("theta1"), p.opt("delta_theta")) {
        (Some(_), Some(_)) => return Err(bad("delta_theta", "give theta1 or delta_theta, not both")),
        (Some(t1), None) => t1,
        (None, Some(d)) => theta2 + d,
        (None, None) => return Err(bad("theta1", "missing")),
    };
    Ok(SingletConfig { theta1, theta2, delta_s: p.num("delta_s")? })
}

fn singlet(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let config = singlet_config(p)?;
    let est = simulate_singlet(&config, n, seed)?;
    let analytic = singlet_correlation(&config);
    let mut checks = vec![
        Check::sigma(
            "singlet.correlation",
            est.correlation,
            analytic,
            ((1.0 - analytic * analytic).max(0.0) / n as f64).sqrt(),
            SIGMA_LEVEL,
        ),
        Check::sigma("singlet.no_signaling", est.marginals.0, 0.5, binomial_std_error(0.5, n), SIGMA_LEVEL),
    ];
    if analytic == -1.0 {
        let same = est.stats.count("++") + est.stats.count("--");
        checks.push(Check::within("singlet.all_opposite", same as f64, 0.0));
    }
    let row = vec![
        config.delta_theta(),
        analytic,
        est.correlation,
        est.correlation_std_error,
        n as f64,
        est.marginals.0,
        est.marginal_std_errors.0,
    ];
    let details = json!({
        "theta1": config.theta1,
        "theta2": config.theta2,
        "counts": est.stats,
        "marginal2": est.marginals.1,
        "marginal2_std_err": est.marginal_std_errors.1,
    });
    Ok((vec![row], checks, details))
}

fn chsh(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let settings =
        ChshSettings { a: p.num("a")?, a_prime: p.num("a_prime")?, b: p.num("b")?, b_prime: p.num("b_prime")? };
    let delta_s = p.num("delta_s")?;
    let at = |t1: f64, t2: f64| SingletConfig { theta1: t1, theta2: t2, delta_s };
    let est = simulate_chsh(&settings, delta_s, n, seed)?;
    let s_analytic = settings.statistic(|t1, t2| singlet_correlation(&at(t1, t2)));
    let s_lhv_analytic = settings.statistic(|t1, t2| lhv_baseline_correlation(t1, t2, &at(t1, t2)));

    let mut lhv = [0.0; 4];
    let mut lhv_var = 0.0;
    for (i, (t1, t2)) in settings.pairs().into_iter().enumerate() {
        let e = simulate_lhv(&at(t1, t2), n, seed.wrapping_add(4 + i as u64))?;
        lhv[i] = e.correlation;
        lhv_var += e.correlation_std_error.powi(2);
    }
    let s_lhv = (lhv[0] - lhv[1] + lhv[2] + lhv[3]).abs();
    let s_lhv_std_err = lhv_var.sqrt();

    let checks = vec![
        Check::sigma("chsh.S", est.s, s_analytic, est.s_std_error, SIGMA_LEVEL),
        Check::sigma("chsh.S_lhv", s_lhv, s_lhv_analytic, s_lhv_std_err, SIGMA_LEVEL),
        Check::within("chsh.lhv_bound", s_lhv_analytic, 2.0),
    ];
    let row = vec![s_analytic, est.s, est.s_std_error, s_lhv_analytic, s_lhv, s_lhv_std_err, n as f64];
    let details = json!({
        "settings": settings,
        "correlations": est.correlations,
        "correlation_std_errors": est.std_errors,
        "lhv_correlations": lhv,
    });
    Ok((vec![row], checks, details))
}

/// Configuration and propagation variable; the three parameterizations are
/// exclusive.
fn neutrino_config(p: &Params) -> Result<(NeutrinoConfig, f64)> {
    let theta = p.num("theta")?;
    let beam = ["delta_m2", "energy", "length"].map(|k| p.opt(k));
    let freq = [p.opt("omega1"), p.opt("omega2")];
    let phase = p.opt("phase");
    let modes = [beam.iter().any(Option::is_some), freq.iter().any(Option::is_some), phase.is_some()];
    if modes.iter().filter(|&&m| m).count() > 1 {
        return Err(bad("phase", "give exactly one of: phase; omega1/omega2/t; delta_m2/energy/length"));
    }
    if modes[0] {
        let [Some(delta_m2), Some(energy), Some(length)] = beam else {
            return Err(bad("delta_m2", "beam kinematics needs delta_m2, energy and length"));
        };
        let c = NeutrinoConfig {
            theta_mix: theta,
            kinematics: actionwave_core::neutrino::Kinematics::Beam {
                delta_m2,
                energy,
                c_light: p.num("c_light")?,
                hbar: p.num("hbar")?,
            },
        };
        Ok((c, length))
    } else if modes[1] {
        let [Some(omega1), Some(omega2)] = freq else {
            return Err(bad("omega1", "frequency kinematics needs omega1 and omega2"));
        };
        Ok((NeutrinoConfig::with_frequencies(theta, omega1, omega2), p.opt("t").unwrap_or(1.0)))
    } else {
        Ok((NeutrinoConfig::unit_phase(theta), phase.unwrap_or(PI / 2.0)))
    }
}

fn neutrino(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let (config, x) = neutrino_config(p)?;
    let phase = config.phase(x)?;
    if n == 0 {
        return Err(bad("n_events", "must be at least 1"));
    }
    let model = NeutrinoModel::new(&config, x)?;
    let key = EventKey::new(seed);
    let mut counts = [0u64; 2];
    let mut mass_changes = 0u64;
    for k in 0..n {
        let h = model.history(&mut key.rng(k), k)?;
        counts[h.flavor] += 1;
        mass_changes += u64::from(h.mass_at_emission != h.mass_at_detection);
    }
    let p_emu = appearance_from_phase(config.theta_mix, phase);
    let p_ee = 1.0 - p_emu;
    let freq_e = counts[0] as f64 / n as f64;
    let checks = vec![
        Check::sigma("neutrino.survival", freq_e, p_ee, binomial_std_error(p_ee, n), SIGMA_LEVEL),
        Check::within("neutrino.mass_constant", mass_changes as f64, 0.0),
    ];
    let row = vec![phase, p_ee, p_emu, freq_e, 1.0 - freq_e, binomial_std_error(freq_e, n), n as f64];
    Ok((vec![row], checks, json!({ "counts": { "e": counts[0], "mu": counts[1] }, "propagation": x })))
}

/// Relative width error allowed against the free-spreading closed form.
const WIDTH_TOLERANCE: f64 = 1e-3;
/// Term-identity residual relative to the size of the Laplacian.
const TERM_TOLERANCE: f64 = 1e-4;
const DRIFT_TOLERANCE: f64 = 1e-10;
const GAUGE_TOLERANCE: f64 = 1e-12;

fn schrodinger(p: &Params) -> Result<Parts> {
    let c = p.constants()?;
    let grid = Grid1D::new(p.num("x_min")?, p.num("x_max")?, p.count("n_points")? as usize)?;
    let (sigma0, beta, x0) = (p.num("sigma0")?, p.num("beta")?, p.num("x0")?);
    let packet = gaussian_packet(&grid, x0, sigma0, p.num("k0")?)?;
    let chirp: Vec<Complex64> = packet
        .psi
        .iter()
        .zip(grid.points())
        .map(|(z, x)| z * Complex64::cis(beta * (x - x0).powi(2) / c.hbar))
        .collect();
    let initial = HybridWavefunction::new(grid, chirp)?;
    let free = p.text("potential") != Some("harmonic");
    let v = if free { PotentialField::zero(&grid) } else { PotentialField::harmonic(&grid, &c, p.num("omega")?) };
    let t = p.num("t")?;
    let steps = p.count("steps")? as usize;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(bad("t", format!("must be non-negative, got {t}")));
    }
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let fin = evolve(&initial, &v, &c, dt, steps)?;

    let drift = (fin.norm_sqr() - initial.norm_sqr()).abs();
    let terms = term_decomposition_residual(&fin, &c)?;
    let shifted = fin.clone().with_global_phase(0.7);
    let density_shift = fin.density().iter().zip(shifted.density()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let e0 = energy(&fin, &v, &c)?;
    let energy_shift = (energy(&shifted, &v, &c)? - e0).abs() / e0.abs().max(1.0);
    let mut checks = vec![
        Check::within("schrodinger.norm_drift", drift, DRIFT_TOLERANCE),
        Check::within("schrodinger.term_identity", terms.residual / terms.scale, TERM_TOLERANCE),
        Check::within("schrodinger.gauge", density_shift.max(energy_shift), GAUGE_TOLERANCE),
    ];
    let (mean, width) = fin.position_moments();
    let expected_width = (free && beta == 0.0).then(|| free_gaussian_width(sigma0, &c, t));
    if let Some(w) = expected_width {
        checks.push(Check::within("schrodinger.width", (width / w - 1.0).abs(), WIDTH_TOLERANCE));
    }

    let m = madelung_decompose(&fin, c.hbar)?;
    let rows = grid
        .points()
        .into_iter()
        .zip(&fin.psi)
        .zip(m.a.iter().zip(&m.s))
        .map(|((x, z), (a, s))| vec![x, z.re, z.im, *a, *s])
        .collect();
    let details = json!({
        "dt": dt,
        "steps": steps,
        "norm": fin.norm_sqr(),
        "energy": e0,
        "mean_x": mean,
        "width": width,
        "expected_width": expected_width,
        "term_residual": terms.residual,
        "term_scale": terms.scale,
        "term_max": terms.term_max,
        "excluded_points": terms.excluded,
    });
    Ok((rows, checks, details))
}

fn dirac(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let config = DiracFormConfig {
        omega: p.num("omega")?,
        b: [p.num("bx")?, p.num("by")?, p.num("bz")?],
        mu0: p.num("mu0")?,
        hbar: p.num("hbar")?,
    };
    let h = build_hamiltonian(&config)?;
    let e = spectrum(&h)?;
    let expected = split_energy(&config);
    let eig_residual =
        [expected, expected, -expected, -expected].iter().zip(e).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let clifford = verify_clifford(&config)?;
    let scale = expected.max(1.0);
    let mut checks = vec![
        Check::within("dirac.eigenvalues", eig_residual, 1e-12 * scale),
        Check::within("dirac.hermiticity", hermiticity_defect(&h), 0.0),
        Check::within("dirac.clifford", clifford.max_residual(), 0.0),
        Check::within("dirac.reconstruction", clifford.reconstruction, 1e-15 * scale),
    ];
    let mut row = vec![e[0], e[1], e[2], e[3], expected, clifford.max_residual()];
    let mut details = json!({ "clifford": clifford });

    if config.b.iter().all(|&v| v == 0.0) {
        let t = p.num("t")?;
        let state = tunneling_evolution(&config, t)?;
        let stats = simulate_tunneling(&config, t, n, seed)?;
        let freq = stats.frequency(WELL_LABELS[1]);
        checks.push(Check::sigma(
            "dirac.tunneling",
            freq,
            state.p_swap,
            binomial_std_error(state.p_swap, n),
            SIGMA_LEVEL,
        ));
        row.extend([state.p_swap, freq, binomial_std_error(freq, n), n as f64]);
        details["tunneling"] = json!({ "t": t, "state": state, "counts": stats });
    } else {
        row.extend([f64::NAN; 4]);
        let ratio = component_ratio(&config)?;
        details["component_ratio"] = json!(ratio);
        if config.omega > 0.0 && config.mu0 != 0.0 {
            let strengths: Vec<f64> = (1..=10).map(|k| 1e-3 * k as f64).collect();
            details["component_ratio_fit"] = json!(component_ratio_fit(&config, &strengths)?);
        }
    }
    Ok((vec![row], checks, details))
}

/// Points on the one-wavelength grid used for the quantum potential.
const VQ_POINTS: usize = 64;
/// `V_q` is only compared where `|cos(ax)|` is at least this.
const VQ_REGION: f64 = 1e-2;

fn bohm(p: &Params, n: u64, seed: u64) -> Result<Parts> {
    let c = p.constants()?;
    let a = p.num("a")?;
    let half_width = p.opt("half_width").unwrap_or(100.5 * PI / a);
    let state = BoxState::new(a, half_width, &c);
    state.validate()?;

    let samples = p.count("samples")?;
    let mut max_v: f64 = 0.0;
    let mut nodes = 0u64;
    for k in 0..samples {
        let x = -half_width + 2.0 * half_width * (k as f64 + 0.5) / samples as f64;
        match bohm_velocity(&state, x, &c) {
            Ok(v) => max_v = max_v.max(v.abs()),
            Err(Error::Node { .. }) => nodes += 1,
            Err(e) => return Err(e),
        }
    }

    let grid = Grid1D::new(-PI / a, PI / a, VQ_POINTS)?;
    let r: Vec<f64> = grid.points().iter().map(|x| (a * x).cos()).collect();
    let vq = quantum_potential(&r, &grid, &c)?;
    let vq_expected = c.hbar * c.hbar * a * a / (2.0 * c.mass);
    let vq_dev = r
        .iter()
        .zip(&vq)
        .filter(|(r, _)| r.abs() >= VQ_REGION)
        .filter_map(|(_, v)| v.map(|v| (v - vq_expected).abs()))
        .fold(0.0, f64::max);

    let report = rqm_momentum_model(&state, &c, n, seed)?;
    let freq = report.stats.frequency("+p");
    let checks = vec![
        Check::within("bohm.stasis", max_v, 0.0),
        Check::within("bohm.quantum_potential", vq_dev, 1e-10 * vq_expected.max(1.0)),
        Check::sigma("bohm.momentum", freq, 0.5, binomial_std_error(0.5, n), SIGMA_LEVEL),
    ];
    let row = vec![
        a,
        report.momentum_magnitude,
        freq,
        binomial_std_error(freq, n),
        report.mean_momentum,
        report.mean_std_error,
        n as f64,
        max_v,
    ];
    let details = json!({
        "half_width": half_width,
        "velocity_samples": samples,
        "velocity_nodes": nodes,
        "quantum_potential": {
            "expected": vq_expected,
            "x": grid.points(),
            "values": vq,
        },
        "commentary": report.commentary,
    });
    Ok((vec![row], checks, details))
}

/// Slope window for the Born-rule convergence check.
const BORN_SLOPE: (f64, f64) = (-0.5, 0.05);
pub const BORN_PROBABILITIES: [f64; 3] = [0.5, 0.3, 0.2];

pub fn born_model() -> BranchPipeline {
    let branches = BranchSet::real(["a", "b", "c"].into_iter().zip(BORN_PROBABILITIES.map(f64::sqrt)))
        .expect("probabilities sum to one");
    BranchPipeline::measurement(branches)
}

fn born(p: &Params, seed: u64) -> Result<Parts> {
    let (lo, hi) = (p.count("n_min")?, p.count("n_max")?);
    let per_decade = p.count("per_decade")?;
    let replicates = p.count("replicates")?;
    if lo < 1 || hi <= lo {
        return Err(bad("n_max", format!("need 1 <= n_min < n_max, got {lo}..{hi}")));
    }
    if per_decade == 0 || per_decade > 100 || replicates == 0 || replicates > u32::MAX as u64 {
        return Err(bad("per_decade", "per_decade and replicates must be positive"));
    }
    let ladder = geometric_ladder(lo, hi, per_decade as u32);
    let report = born_convergence(&born_model(), &ladder, seed, replicates as u32)?;
    let slope = report.slope.unwrap_or(f64::NAN);
    let residual = (slope - BORN_SLOPE.0).abs();
    let checks =
        vec![Check::within("born.slope", if residual.is_nan() { f64::INFINITY } else { residual }, BORN_SLOPE.1)];
    let rows = report.points.iter().map(|pt| vec![pt.n as f64, pt.error, replicates as f64]).collect();
    Ok((rows, checks, json!({ "slope": report.slope, "probabilities": BORN_PROBABILITIES })))
}
