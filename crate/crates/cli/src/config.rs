//! Run configuration: a TOML document with strict key checking.
//!
//! ```toml
//! experiment = "torus_decay"   # required
//! output_dir = "out"           # optional, default "output"
//!
//! [grid]          # space_dim, points_per_axis, domain_length
//! [hermite]       # degree_cap
//! [system]        # mu, c0, gamma
//! [time]          # t_end, dt, sample_every, energy_order
//! [initial_data]  # generator, amplitude, seed
//! [analysis]      # experiment-specific knobs, see `AnalysisConfig`
//! ```
//!
//! Every omitted key takes the default listed on its field and reappears in
//! the manifest. Unknown keys, type mismatches and out-of-range values are all
//! reported together.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use kinfluid_core::dynamics::SimulationConfig;
use kinfluid_core::initial::Generator;
use kinfluid_core::{HermiteSpec, SpatialGrid, SpectrumProfile, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Nonlinear run; energy time series.
    Simulate,
    /// Per-mode decay table of the linearized flow.
    ModeSweep,
    /// Whole-space algebraic decay of the linear semigroup.
    SemigroupDecay,
    /// Extra decay of the microscopic part and the velocity gap.
    MicroGap,
    /// Vanishing-viscosity convergence order.
    InviscidOrder,
    /// Exponential decay on the torus with the Lyapunov monitor.
    TorusDecay,
    /// Brute-force oracle comparisons.
    OracleSuite,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::ModeSweep,
        Experiment::SemigroupDecay,
        Experiment::MicroGap,
        Experiment::InviscidOrder,
        Experiment::TorusDecay,
        Experiment::OracleSuite,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::ModeSweep => "mode_sweep",
            Experiment::SemigroupDecay => "semigroup_decay",
            Experiment::MicroGap => "micro_gap",
            Experiment::InviscidOrder => "inviscid_order",
            Experiment::TorusDecay => "torus_decay",
            Experiment::OracleSuite => "oracle_suite",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                format!(
                    "unknown experiment `{s}`; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    /// Default 1.
    pub space_dim: usize,
    /// Default 64.
    pub points_per_axis: usize,
    /// Default 2 pi.
    pub domain_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HermiteConfig {
    /// Default 12.
    pub degree_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    /// Default 0.
    pub mu: f64,
    /// Default 0.5.
    pub c0: f64,
    /// Default 2.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConfig {
    /// Default 40.
    pub t_end: f64,
    /// Default 0.005.
    pub dt: f64,
    /// Default 20.
    pub sample_every: usize,
    /// Sobolev order of the energy reports; default 3.
    pub energy_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialConfig {
    /// Default "prepared_smooth".
    pub generator: String,
    /// Default 0.01.
    pub amplitude: f64,
    /// Default 0.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisConfig {
    /// Wavenumbers of `mode_sweep`; default 0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10, 20.
    pub xi: Vec<f64>,
    /// Scaled sample times of `mode_sweep`; default 2, 2.25, ..., 8.
    pub scaled_times: Vec<f64>,
    /// Integrability class of the semigroup profile; default 1.
    pub q: f64,
    /// Spatial derivative order of `semigroup_decay`; default 0.
    pub deriv_order: usize,
    /// Geometric sample times of the semigroup experiments; defaults 100,
    /// 10000 and 17 samples.
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    /// Relative tolerance of the radial quadrature; default 1e-6.
    pub rtol: f64,
    /// Viscosities of `inviscid_order`; default 0.04, 0.02, 0.01, 0.005.
    pub mus: Vec<f64>,
    /// Time window of the exponential fit in `torus_decay`; default [5, 40].
    pub fit_window: Vec<f64>,
    /// Lyapunov monitor frequency cutoff and constant; defaults 2 and 1.
    pub r0: f64,
    pub lyapunov_c: f64,
    /// Weights of the decay functional in `mode_sweep`; defaults 0.1, 0.01.
    pub tau4: f64,
    pub tau5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub grid: GridConfig,
    pub hermite: HermiteConfig,
    pub system: SystemConfig,
    pub time: TimeConfig,
    pub initial_data: InitialConfig,
    pub analysis: AnalysisConfig,
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Section {
    name: &'static str,
    table: Table,
}

impl Section {
    fn key(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.table.remove(key)
    }

    fn f64(&mut self, key: &str, default: f64, errors: &mut Vec<String>) -> f64 {
        match self.take(key) {
            None => default,
            Some(Value::Float(x)) => x,
            Some(Value::Integer(i)) => i as f64,
            Some(v) => {
                errors.push(format!(
                    "{}: expected a number, got {}",
                    self.key(key),
                    v.type_str()
                ));
                default
            }
        }
    }

    fn uint(&mut self, key: &str, default: u64, errors: &mut Vec<String>) -> u64 {
        match self.take(key) {
            None => default,
            Some(Value::Integer(i)) if i >= 0 => i as u64,
            Some(Value::Integer(i)) => {
                errors.push(format!("{}: must be nonnegative, got {i}", self.key(key)));
                default
            }
            Some(v) => {
                errors.push(format!(
                    "{}: expected an integer, got {}",
                    self.key(key),
                    v.type_str()
                ));
                default
            }
        }
    }

    fn usize(&mut self, key: &str, default: usize, errors: &mut Vec<String>) -> usize {
        self.uint(key, default as u64, errors) as usize
    }

    fn string(&mut self, key: &str, default: &str, errors: &mut Vec<String>) -> String {
        match self.take(key) {
            None => default.to_string(),
            Some(Value::String(s)) => s,
            Some(v) => {
                errors.push(format!(
                    "{}: expected a string, got {}",
                    self.key(key),
                    v.type_str()
                ));
                default.to_string()
            }
        }
    }

    fn list(&mut self, key: &str, default: Vec<f64>, errors: &mut Vec<String>) -> Vec<f64> {
        let Some(v) = self.take(key) else {
            return default;
        };
        let Value::Array(items) = v else {
            errors.push(format!(
                "{}: expected an array of numbers, got {}",
                self.key(key),
                v.type_str()
            ));
            return default;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Value::Float(x) => out.push(x),
                Value::Integer(i) => out.push(i as f64),
                other => {
                    errors.push(format!(
                        "{}: expected numbers, found {}",
                        self.key(key),
                        other.type_str()
                    ));
                    return default;
                }
            }
        }
        out
    }

    fn finish(self, errors: &mut Vec<String>) {
        for k in self.table.keys() {
            errors.push(format!("unknown key `{}`", self.key(k)));
        }
    }
}

const SECTIONS: [&str; 6] = [
    "grid",
    "hermite",
    "system",
    "time",
    "initial_data",
    "analysis",
];

fn section(root: &mut Table, name: &'static str, errors: &mut Vec<String>) -> Section {
    let table = match root.remove(name) {
        None => Table::new(),
        Some(Value::Table(t)) => t,
        Some(v) => {
            errors.push(format!("{name}: expected a table, got {}", v.type_str()));
            Table::new()
        }
    };
    Section { name, table }
}

fn default_scaled_times() -> Vec<f64> {
    (0..25).map(|i| 2.0 + 0.25 * i as f64).collect()
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let mut root: Table = text.parse().map_err(|e: toml::de::Error| {
        ConfigErrors(vec![format!("malformed TOML: {}", e.message())])
    })?;
    let mut errors = Vec::new();

    let mut sections: Vec<Section> = SECTIONS
        .iter()
        .map(|&n| section(&mut root, n, &mut errors))
        .collect();
    let mut top = Section {
        name: "",
        table: root,
    };
    let experiment = match top.take("experiment") {
        None => {
            errors.push("missing required key `experiment`".into());
            None
        }
        Some(Value::String(s)) => s.parse::<Experiment>().map_err(|e| errors.push(e)).ok(),
        Some(v) => {
            errors.push(format!(
                "experiment: expected a string, got {}",
                v.type_str()
            ));
            None
        }
    };
    let output_dir = PathBuf::from(top.string("output_dir", "output", &mut errors));
    top.finish(&mut errors);

    let [grid, hermite, system, time, initial, analysis] = &mut sections[..] else {
        unreachable!()
    };
    let e = &mut errors;
    let grid_cfg = GridConfig {
        space_dim: grid.usize("space_dim", 1, e),
        points_per_axis: grid.usize("points_per_axis", 64, e),
        domain_length: grid.f64("domain_length", 2.0 * PI, e),
    };
    let hermite_cfg = HermiteConfig {
        degree_cap: hermite.usize("degree_cap", 12, e),
    };
    let system_cfg = SystemConfig {
        mu: system.f64("mu", 0.0, e),
        c0: system.f64("c0", 0.5, e),
        gamma: system.f64("gamma", 2.0, e),
    };
    let time_cfg = TimeConfig {
        t_end: time.f64("t_end", 40.0, e),
        dt: time.f64("dt", 0.005, e),
        sample_every: time.usize("sample_every", 20, e),
        energy_order: time.usize("energy_order", 3, e),
    };
    let initial_cfg = InitialConfig {
        generator: initial.string("generator", Generator::PreparedSmooth.name(), e),
        amplitude: initial.f64("amplitude", 0.01, e),
        seed: initial.uint("seed", 0, e),
    };
    let analysis_cfg = AnalysisConfig {
        xi: analysis.list(
            "xi",
            vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
            e,
        ),
        scaled_times: analysis.list("scaled_times", default_scaled_times(), e),
        q: analysis.f64("q", 1.0, e),
        deriv_order: analysis.usize("deriv_order", 0, e),
        t_min: analysis.f64("t_min", 100.0, e),
        t_max: analysis.f64("t_max", 1e4, e),
        samples: analysis.usize("samples", 17, e),
        rtol: analysis.f64("rtol", 1e-6, e),
        mus: analysis.list("mus", vec![0.04, 0.02, 0.01, 0.005], e),
        fit_window: analysis.list("fit_window", vec![5.0, 40.0], e),
        r0: analysis.f64("r0", 2.0, e),
        lyapunov_c: analysis.f64("lyapunov_c", 1.0, e),
        tau4: analysis.f64("tau4", kinfluid_core::linear::DEFAULT_TAU4, e),
        tau5: analysis.f64("tau5", kinfluid_core::linear::DEFAULT_TAU5, e),
    };
    for s in sections {
        s.finish(&mut errors);
    }

    let Some(experiment) = experiment else {
        return Err(ConfigErrors(errors));
    };
    let cfg = RunConfig {
        experiment,
        output_dir,
        grid: grid_cfg,
        hermite: hermite_cfg,
        system: system_cfg,
        time: time_cfg,
        initial_data: initial_cfg,
        analysis: analysis_cfg,
    };
    cfg.check_ranges(&mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn strip(e: kinfluid_core::Error) -> String {
    match e {
        kinfluid_core::Error::InvalidParameter(m)
        | kinfluid_core::Error::InvalidGrid(m)
        | kinfluid_core::Error::InvalidSpec(m) => m,
        other => other.to_string(),
    }
}

impl RunConfig {
    fn check_ranges(&self, errors: &mut Vec<String>) {
        let mut push = |r: Result<(), String>| {
            if let Err(m) = r {
                errors.extend(m.split("; ").map(str::to_string));
            }
        };
        push(self.spatial_grid().map(|_| ()).map_err(strip));
        push(self.hermite_spec().map(|_| ()).map_err(strip));
        push(self.params().map(|_| ()).map_err(strip));
        push(self.simulation().validate().map_err(strip));
        let ic = &self.initial_data;
        push(ic.generator.parse::<Generator>().map(|_| ()).map_err(strip));
        if !(ic.amplitude.is_finite() && (0.0..=0.1).contains(&ic.amplitude)) {
            push(Err(format!(
                "amplitude must lie in [0, 0.1], got {}",
                ic.amplitude
            )));
        }
        let a = &self.analysis;
        if a.xi.is_empty() || a.xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            push(Err(
                "analysis.xi must be a nonempty list of positive wavenumbers".into(),
            ));
        }
        if a.scaled_times
            .iter()
            .filter(|t| **t > 0.0 && t.is_finite())
            .count()
            < 10
        {
            push(Err(
                "analysis.scaled_times needs at least 10 positive times".into(),
            ));
        }
        push(SpectrumProfile::lq(a.q).map(|_| ()).map_err(strip));
        if a.deriv_order > 1 {
            push(Err(format!(
                "analysis.deriv_order must be 0 or 1, got {}",
                a.deriv_order
            )));
        }
        if !(a.t_min > 0.0 && a.t_max > a.t_min && a.t_max.is_finite()) {
            push(Err(format!(
                "need 0 < t_min < t_max, got t_min = {}, t_max = {}",
                a.t_min, a.t_max
            )));
        }
        if a.samples < 10 {
            push(Err(format!(
                "analysis.samples must be at least 10, got {}",
                a.samples
            )));
        }
        if !(a.rtol > 0.0 && a.rtol < 1.0) {
            push(Err(format!(
                "analysis.rtol must lie in (0, 1), got {}",
                a.rtol
            )));
        }
        let distinct: BTreeSet<u64> = a.mus.iter().map(|m| m.to_bits()).collect();
        if a.mus.iter().any(|m| !(*m > 0.0 && m.is_finite())) || distinct.len() < 3 {
            push(Err(
                "analysis.mus needs at least 3 distinct positive viscosities".into(),
            ));
        }
        if !(a.fit_window.len() == 2 && a.fit_window[0] >= 0.0 && a.fit_window[1] > a.fit_window[0])
        {
            push(Err(format!(
                "analysis.fit_window must be [start, end] with 0 <= start < end, got {:?}",
                a.fit_window
            )));
        }
        if !(a.r0 > 0.0 && a.r0.is_finite()) {
            push(Err(format!("analysis.r0 must be positive, got {}", a.r0)));
        }
        if !(a.lyapunov_c >= 0.0 && a.lyapunov_c.is_finite()) {
            push(Err(format!(
                "analysis.lyapunov_c must be nonnegative, got {}",
                a.lyapunov_c
            )));
        }
        if !(a.tau4 >= 0.0 && a.tau5 >= 0.0 && a.tau4.is_finite() && a.tau5.is_finite()) {
            push(Err(format!(
                "analysis.tau4 and tau5 must be nonnegative, got {} and {}",
                a.tau4, a.tau5
            )));
        }
    }

    pub fn spatial_grid(&self) -> kinfluid_core::Result<SpatialGrid> {
        SpatialGrid::new(
            self.grid.space_dim,
            self.grid.points_per_axis,
            self.grid.domain_length,
        )
    }

    /// Velocity truncation matching the spatial dimension.
    pub fn hermite_spec(&self) -> kinfluid_core::Result<HermiteSpec> {
        match self.grid.space_dim {
            3 => HermiteSpec::three_dim(self.hermite.degree_cap),
            _ => HermiteSpec::one_dim(self.hermite.degree_cap),
        }
    }

    pub fn params(&self) -> kinfluid_core::Result<SystemParams> {
        SystemParams::new(self.system.mu, self.system.c0, self.system.gamma)
    }

    pub fn simulation(&self) -> SimulationConfig {
        let mut s = SimulationConfig::new(self.time.t_end, self.time.dt, self.time.sample_every);
        s.energy_order = self.time.energy_order;
        s
    }

    pub fn generator(&self) -> Generator {
        self.initial_data
            .generator
            .parse()
            .expect("validated generator")
    }

    /// Geometric sample times `t_min .. t_max`.
    pub fn semigroup_times(&self) -> Vec<f64> {
        let a = &self.analysis;
        let ratio = (a.t_max / a.t_min).ln() / (a.samples - 1) as f64;
        (0..a.samples)
            .map(|i| a.t_min * (ratio * i as f64).exp())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("experiment = \"torus_decay\"\n").unwrap();
        assert_eq!(c.experiment, Experiment::TorusDecay);
        assert_eq!(c.grid.points_per_axis, 64);
        assert_eq!(c.hermite.degree_cap, 12);
        assert_eq!(c.system.gamma, 2.0);
        assert_eq!(c.time.sample_every, 20);
        assert_eq!(c.initial_data.generator, "prepared_smooth");
        assert_eq!(c.analysis.fit_window, vec![5.0, 40.0]);
        assert_eq!(c.output_dir, PathBuf::from("output"));
        assert_eq!(c.analysis.scaled_times.len(), 25);
    }

    #[test]
    fn gamma_below_one_is_rejected() {
        let e = parse_config("experiment = \"simulate\"\n[system]\ngamma = 0.9\n").unwrap_err();
        assert!(e.0.iter().any(|m| m.contains("gamma must exceed 1")), "{e}");
    }

    #[test]
    fn negative_mu_is_rejected() {
        let e = parse_config("experiment = \"simulate\"\n[system]\nmu = -0.1\n").unwrap_err();
        assert!(
            e.0.iter().any(|m| m.contains("mu must be nonnegative")),
            "{e}"
        );
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"
experiment = "simulate"
colour = "red"
[grid]
points_per_axis = 12
bogus = 1
[system]
gamma = 0.5
mu = "fast"
[initial_data]
amplitude = 0.5
generator = "nope"
[extra]
"#;
        let e = parse_config(text).unwrap_err();
        let all = e.to_string();
        for needle in [
            "unknown key `colour`",
            "unknown key `grid.bogus`",
            "unknown key `extra`",
            "points_per_axis",
            "gamma must exceed 1",
            "system.mu: expected a number, got string",
            "amplitude must lie in [0, 0.1]",
            "nope",
        ] {
            assert!(all.contains(needle), "missing `{needle}` in\n{all}");
        }
    }

    #[test]
    fn experiment_is_required_and_checked() {
        let e = parse_config("[grid]\n").unwrap_err();
        assert!(e.0[0].contains("missing required key `experiment`"));
        let e = parse_config("experiment = \"dance\"").unwrap_err();
        assert!(e.0[0].contains("unknown experiment `dance`"));
        assert!(parse_config("experiment = [").unwrap_err().0[0].starts_with("malformed TOML"));
    }

    #[test]
    fn integers_are_accepted_for_reals() {
        let c = parse_config(
            "experiment = \"simulate\"\n[system]\nc0 = 1\n[analysis]\nxi = [1, 2.5]\n",
        )
        .unwrap();
        assert_eq!(c.system.c0, 1.0);
        assert_eq!(c.analysis.xi, vec![1.0, 2.5]);
    }

    #[test]
    fn semigroup_times_are_geometric() {
        let c = parse_config("experiment = \"semigroup_decay\"").unwrap();
        let t = c.semigroup_times();
        assert_eq!(t.len(), 17);
        assert!((t[0] - 100.0).abs() < 1e-9 && (t[16] - 1e4).abs() < 1e-6);
        assert!((t[8] - 1e3).abs() < 1e-7);
    }

    #[test]
    fn three_dimensional_grid_uses_reduced_velocity_basis() {
        let c =
            parse_config("experiment = \"simulate\"\n[grid]\nspace_dim = 3\npoints_per_axis = 8\n")
                .unwrap();
        assert_eq!(c.hermite_spec().unwrap().velocity_dim(), 3);
    }
}
