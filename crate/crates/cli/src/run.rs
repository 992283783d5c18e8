//! Experiment dispatch and artifact writing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use kinfluid_core::diagnostics::{fit_decay, lyapunov_monitor, DecayModel};
use kinfluid_core::hermite::HermiteSpec;
use kinfluid_core::initial::make_initial_data;
use kinfluid_core::inviscid::{order_fit, paired_run};
use kinfluid_core::linear::{
    semigroup_decay, slowest_mode_rate, verify_mode_decay, SemigroupSeries,
};
use kinfluid_core::oracle::run_oracle_suite;
use kinfluid_core::{Dynamics, EnergyReport, PerturbationState, SpectrumProfile};

use crate::config::{ConfigErrors, Experiment, RunConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigErrors),
    Core(kinfluid_core::Error),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "invalid configuration:\n{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<kinfluid_core::Error> for RunError {
    fn from(e: kinfluid_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<ConfigErrors> for RunError {
    fn from(e: ConfigErrors) -> Self {
        RunError::Config(e)
    }
}

/// One pass/fail assertion of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub requirement: String,
    pub passed: bool,
}

fn check(name: &str, value: f64, requirement: &str, passed: bool) -> Check {
    Check {
        name: name.to_string(),
        value,
        requirement: requirement.to_string(),
        passed,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
}

/// Result of an experiment before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Summary,
    /// `(file name, contents)` of every CSV artifact.
    pub tables: Vec<(String, String)>,
}

struct Builder {
    checks: Vec<Check>,
    metrics: BTreeMap<String, f64>,
    tables: Vec<(String, String)>,
}

impl Builder {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            tables: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    fn finish(self, experiment: Experiment) -> Outcome {
        Outcome {
            summary: Summary {
                experiment,
                passed: self.checks.iter().all(|c| c.passed),
                checks: self.checks,
                metrics: self.metrics,
            },
            tables: self.tables,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn energy_csv(reports: &[EnergyReport]) -> String {
    let mut s = String::from(EnergyReport::CSV_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn series_csv(s: &SemigroupSeries) -> String {
    let mut out = String::from("t,total,rho,u,f,micro,gap\n");
    for j in 0..s.times.len() {
        let row = [
            s.times[j], s.total[j], s.rho[j], s.u[j], s.f[j], s.micro[j], s.gap[j],
        ];
        out.push_str(&row.map(num).join(","));
        out.push('\n');
    }
    out
}

fn initial_state(cfg: &RunConfig) -> kinfluid_core::Result<PerturbationState> {
    make_initial_data(
        cfg.generator(),
        cfg.spatial_grid()?,
        cfg.hermite_spec()?,
        cfg.initial_data.amplitude,
        cfg.initial_data.seed,
    )
}

fn dynamics(cfg: &RunConfig) -> kinfluid_core::Result<Dynamics> {
    Dynamics::new(cfg.spatial_grid()?, cfg.hermite_spec()?, cfg.params()?)
}

fn simulate(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let dy = dynamics(cfg)?;
    let mut sim = cfg.simulation();
    sim.keep_snapshots = false;
    let traj = dy.simulate(&initial_state(cfg)?, &sim)?;
    let first = traj.reports.first().expect("initial sample");
    let last = traj.reports.last().expect("final sample");
    let mut drift = (last.mass_fluid - first.mass_fluid)
        .abs()
        .max((last.mass_particles - first.mass_particles).abs());
    for k in 0..3 {
        drift = drift.max((last.momentum[k] - first.momentum[k]).abs());
    }
    b.metric("initial_energy", first.energy);
    b.metric("final_energy", last.energy);
    b.metric("conservation_drift", drift);
    let finite = traj.reports.iter().all(EnergyReport::is_finite);
    b.checks.push(check(
        "reports finite",
        f64::from(u8::from(finite)),
        "all samples finite",
        finite,
    ));
    b.tables
        .push(("energy.csv".into(), energy_csv(&traj.reports)));
    Ok(())
}

fn mode_sweep(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let a = &cfg.analysis;
    let table = verify_mode_decay(
        cfg.hermite_spec()?,
        &cfg.params()?,
        &a.xi,
        &a.scaled_times,
        a.tau4,
        a.tau5,
    )?;
    let mut csv =
        String::from("xi,fitted_rate,bound_rate,normalized_rate,gronwall_c,r_squared,monotone\n");
    for r in &table.rows {
        let vals = [
            r.xi,
            r.fitted_rate,
            r.bound_rate,
            r.normalized_rate,
            r.gronwall_c,
            r.r_squared,
        ];
        csv.push_str(&format!("{},{}\n", vals.map(num).join(","), r.monotone));
    }
    b.tables.push(("mode_decay.csv".into(), csv));
    b.metric("c", table.c);
    b.metric("gronwall_c", table.gronwall_c);
    b.checks
        .push(check("uniform constant c", table.c, "> 0", table.c > 0.0));
    let monotone = table.rows.iter().all(|r| r.monotone);
    b.checks.push(check(
        "monotone decay",
        f64::from(u8::from(monotone)),
        "every wavenumber",
        monotone,
    ));
    Ok(())
}

fn semigroup_series(cfg: &RunConfig, deriv_order: usize) -> Result<SemigroupSeries, RunError> {
    let spec = HermiteSpec::three_dim(cfg.hermite.degree_cap)?;
    let profile = SpectrumProfile::lq(cfg.analysis.q)?;
    Ok(semigroup_decay(
        spec,
        &cfg.params()?,
        &profile,
        deriv_order,
        &cfg.semigroup_times(),
        cfg.analysis.rtol,
    )?)
}

fn algebraic(times: &[f64], v: &[f64]) -> kinfluid_core::Result<f64> {
    Ok(fit_decay(
        times,
        v,
        DecayModel::Algebraic,
        (f64::NEG_INFINITY, f64::INFINITY),
    )?
    .rate)
}

fn semigroup(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let k = cfg.analysis.deriv_order;
    let q = cfg.analysis.q;
    let s = semigroup_series(cfg, k)?;
    let slope = algebraic(&s.times, &s.total)?;
    let expected = -1.5 * (1.0 / q - 0.5) - 0.5 * k as f64;
    let tol = if q == 1.0 { 0.05 } else { 0.1 };
    b.metric("slope", slope);
    b.metric("expected_slope", expected);
    b.checks.push(check(
        "norm slope",
        slope,
        &format!("{expected} +- {tol}"),
        (slope - expected).abs() <= tol,
    ));
    b.tables.push(("semigroup.csv".into(), series_csv(&s)));
    Ok(())
}

fn micro_gap(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let s = semigroup_series(cfg, 0)?;
    let t = &s.times;
    let (f, micro, u, gap) = (
        algebraic(t, &s.f)?,
        algebraic(t, &s.micro)?,
        algebraic(t, &s.u)?,
        algebraic(t, &s.gap)?,
    );
    for (name, v) in [
        ("slope_f", f),
        ("slope_micro", micro),
        ("slope_u", u),
        ("slope_gap", gap),
    ] {
        b.metric(name, v);
    }
    let (em, eg) = (f - micro, u - gap);
    b.checks.push(check(
        "micro excess over f",
        em,
        "0.5 +- 0.1",
        (em - 0.5).abs() <= 0.1,
    ));
    b.checks.push(check(
        "gap excess over u",
        eg,
        "0.5 +- 0.1",
        (eg - 0.5).abs() <= 0.1,
    ));
    b.tables.push(("semigroup.csv".into(), series_csv(&s)));
    Ok(())
}

fn inviscid(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let run = paired_run(
        cfg.spatial_grid()?,
        cfg.hermite_spec()?,
        cfg.params()?,
        &initial_state(cfg)?,
        &cfg.analysis.mus,
        &cfg.simulation(),
    )?;
    let mut csv =
        String::from("mu,sup_h1_sq,peak_time,grad_macro,gap_h1,micro_nu,velocity_micro_nu\n");
    for r in &run.reports {
        let i = &r.integrated;
        let vals = [
            r.mu,
            r.sup_h1_sq,
            r.peak_time,
            i.grad_macro,
            i.gap_h1,
            i.micro_nu,
            i.velocity_micro_nu,
        ];
        csv.push_str(&vals.map(num).join(","));
        csv.push('\n');
    }
    b.tables.push(("inviscid.csv".into(), csv));
    let fit = order_fit(&run.reports)?;
    b.metric("order", fit.order);
    b.metric("r_squared", fit.r_squared);
    b.checks.push(check(
        "convergence order",
        fit.order,
        "in [0.9, 1.6]",
        (0.9..=1.6).contains(&fit.order),
    ));
    b.checks.push(check(
        "fit quality",
        fit.r_squared,
        "> 0.98",
        fit.r_squared > 0.98,
    ));
    Ok(())
}

fn torus(cfg: &RunConfig, b: &mut Builder) -> Result<(), RunError> {
    let dy = dynamics(cfg)?;
    let mut sim = cfg.simulation();
    sim.keep_snapshots = true;
    let traj = dy.simulate(&initial_state(cfg)?, &sim)?;
    b.tables
        .push(("energy.csv".into(), energy_csv(&traj.reports)));
    let window = (cfg.analysis.fit_window[0], cfg.analysis.fit_window[1]);
    let energy: Vec<f64> = traj.reports.iter().map(|r| r.energy).collect();
    let fit = fit_decay(&traj.times, &energy, DecayModel::Exponential, window)?;
    let xi = 2.0 * PI / cfg.grid.domain_length;
    let lin = slowest_mode_rate(cfg.hermite_spec()?, &cfg.params()?, xi, &traj.times, window)?;
    let mismatch = (fit.rate / lin.rate - 1.0).abs();
    b.metric("kappa", -fit.rate);
    b.metric("r_squared", fit.r_squared);
    b.metric("linear_kappa", -lin.rate);
    b.checks
        .push(check("decay rate kappa", -fit.rate, "> 0", fit.rate < 0.0));
    b.checks.push(check(
        "log-linear fit",
        fit.r_squared,
        "> 0.99",
        fit.r_squared > 0.99,
    ));
    b.checks.push(check(
        "linear rate mismatch",
        mismatch,
        "< 0.15",
        mismatch < 0.15,
    ));
    for k in [2, 3] {
        let rep = lyapunov_monitor(
            dy.spectral(),
            &traj.snapshots,
            &traj.times,
            k,
            cfg.analysis.r0,
            cfg.analysis.lyapunov_c,
        )?;
        let lam = rep.lambda.unwrap_or(f64::NAN);
        b.metric(&format!("lyapunov_lambda_k{k}"), lam);
        b.checks.push(check(
            &format!("Lyapunov lambda, k = {k}"),
            lam,
            "> 0",
            lam > 0.0,
        ));
        let v = rep.violations.len() as f64;
        b.checks.push(check(
            &format!("Lyapunov violations, k = {k}"),
            v,
            "= 0",
            v == 0.0,
        ));
    }
    Ok(())
}

fn oracles(b: &mut Builder) -> Result<(), RunError> {
    let mut csv = String::from("name,error,tolerance,passed\n");
    for c in run_oracle_suite()? {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            num(c.error),
            num(c.tolerance),
            c.passed
        ));
        b.checks.push(check(
            &c.name,
            c.error,
            &format!("<= {}", c.tolerance),
            c.passed,
        ));
    }
    b.tables.push(("oracles.csv".into(), csv));
    Ok(())
}

/// Run the configured experiment in memory.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut b = Builder::new();
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &mut b)?,
        Experiment::ModeSweep => mode_sweep(cfg, &mut b)?,
        Experiment::SemigroupDecay => semigroup(cfg, &mut b)?,
        Experiment::MicroGap => micro_gap(cfg, &mut b)?,
        Experiment::InviscidOrder => inviscid(cfg, &mut b)?,
        Experiment::TorusDecay => torus(cfg, &mut b)?,
        Experiment::OracleSuite => oracles(&mut b)?,
    }
    Ok(b.finish(cfg.experiment))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    artifacts: Vec<&'a str>,
    config: &'a RunConfig,
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write(path: PathBuf, contents: &str) -> Result<(), RunError> {
    fs::write(&path, contents).map_err(|source| RunError::Io { path, source })
}

/// Run the experiment and write its CSV tables, `summary.json` and
/// `manifest.json` into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<Summary, RunError> {
    let outcome = execute(cfg)?;
    write_artifacts(cfg, &outcome, &cfg.output_dir)?;
    Ok(outcome.summary)
}

pub fn write_artifacts(cfg: &RunConfig, outcome: &Outcome, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, contents) in &outcome.tables {
        write(dir.join(name), contents)?;
    }
    write(dir.join("summary.json"), &pretty(&outcome.summary))?;
    let manifest = Manifest {
        tool: "kinfluid",
        version: env!("CARGO_PKG_VERSION"),
        artifacts: outcome.tables.iter().map(|(n, _)| n.as_str()).collect(),
        config: cfg,
    };
    write(dir.join("manifest.json"), &pretty(&manifest))?;
    Ok(())
}
