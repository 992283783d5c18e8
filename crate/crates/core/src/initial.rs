//! Initial-data generators.
//!
//! Every generator returns a band-limited state whose largest component
//! magnitude equals `amplitude` (before the momentum correction), with
//! `int rho' = int a = 0` and zero total momentum `int (b + (1 + rho') u)`.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::PerturbationState;
use crate::error::{Error, Result};
use crate::hermite::HermiteSpec;
use crate::spectral::{SpatialGrid, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// Low-mode trigonometric profiles in every unknown.
    PreparedSmooth,
    /// Seeded random Fourier coefficients on the lowest modes.
    RandomBand,
    /// Fluid unknowns and `(a, b)` only; `{I - P} f = 0`.
    MacroOnly,
    /// `{I - P} f` only.
    MicroOnly,
}

impl Generator {
    pub const ALL: [Generator; 4] = [
        Generator::PreparedSmooth,
        Generator::RandomBand,
        Generator::MacroOnly,
        Generator::MicroOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Generator::PreparedSmooth => "prepared_smooth",
            Generator::RandomBand => "random_band",
            Generator::MacroOnly => "macro_only",
            Generator::MicroOnly => "micro_only",
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownGenerator(s.to_string()))
    }
}

/// Largest integer wavenumber used by the generators.
const MAX_MODE: i64 = 3;

fn trig_profile(grid: &SpatialGrid, phase: f64, slot: usize) -> Vec<f64> {
    let k0 = grid.fundamental();
    let dim = grid.space_dim();
    let w = 1.0 + (slot % 3) as f64;
    grid.sample(|x| {
        let mut v = 0.0;
        for (a, &xa) in x.iter().enumerate().take(dim) {
            let t = k0 * xa;
            v += (t + phase + 0.7 * (slot + a) as f64).sin() / w
                + 0.5 * (2.0 * t + 0.3 * slot as f64 - phase).cos() / (w + a as f64);
        }
        v
    })
}

fn random_profile(grid: &SpatialGrid, sp: &Spectral, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dim = grid.space_dim();
    let k0 = grid.fundamental();
    let mut modes = Vec::new();
    let r = MAX_MODE;
    let range = |on: bool| if on { -r..=r } else { 0..=0 };
    for k0i in range(true) {
        for k1 in range(dim == 3) {
            for k2 in range(dim == 3) {
                if (k0i, k1, k2) != (0, 0, 0) {
                    modes.push([k0i as f64, k1 as f64, k2 as f64]);
                }
            }
        }
    }
    let coeffs: Vec<(f64, f64)> = modes
        .iter()
        .map(|m| {
            let decay = 1.0 / (1.0 + m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
            (
                rng.random_range(-1.0..1.0) * decay,
                rng.random_range(-1.0..1.0) * decay,
            )
        })
        .collect();
    let v = grid.sample(|x| {
        modes
            .iter()
            .zip(&coeffs)
            .map(|(m, (c, s))| {
                let ph = k0 * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]);
                c * ph.cos() + s * ph.sin()
            })
            .sum()
    });
    sp.dealias(&v)
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

/// Build initial data; `amplitude` must lie in `[0, 0.1]`.
pub fn make_initial_data(
    generator: Generator,
    grid: SpatialGrid,
    spec: HermiteSpec,
    amplitude: f64,
    seed: u64,
) -> Result<PerturbationState> {
    if !(0.0..=0.1).contains(&amplitude) {
        return Err(Error::InvalidParameter(format!(
            "amplitude must lie in [0, 0.1], got {amplitude}"
        )));
    }
    if spec.velocity_dim() != grid.space_dim() {
        return Err(Error::Shape("velocity_dim must equal space_dim".into()));
    }
    let mut state = PerturbationState::zeros(grid, spec);
    if amplitude == 0.0 {
        return Ok(state);
    }
    let sp = Spectral::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = grid.space_dim();
    let (fluid, macro_f, micro_f) = match generator {
        Generator::MacroOnly => (true, true, false),
        Generator::MicroOnly => (false, false, true),
        _ => (true, true, true),
    };
    let mut slot = 0;
    let mut profile = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        slot += 1;
        match generator {
            Generator::RandomBand => random_profile(&grid, &sp, rng),
            _ => trig_profile(&grid, 0.25 * PI, slot),
        }
    };
    if fluid {
        state.rho.values = profile(&mut rng);
        for axis in 0..dim {
            state.u.components[axis] = profile(&mut rng);
        }
    }
    for k in 0..spec.basis_size() {
        let deg = spec.total_degree(k);
        let on = if deg <= 1 { macro_f } else { micro_f };
        // Keep the velocity profile smooth: decay with the Hermite degree.
        if on && deg <= 6 {
            let decay = 0.6f64.powi(deg as i32);
            state.f.coeffs[k] = profile(&mut rng).iter().map(|v| v * decay).collect();
        }
    }
    remove_mean(&mut state.rho.values);
    remove_mean(&mut state.f.coeffs[0]);
    let peak = state.max_abs();
    if peak > 0.0 {
        state = state.scaled(amplitude / peak);
    }
    for axis in 0..dim {
        let unit = spec.unit(axis);
        let npts = grid.num_points() as f64;
        let total: f64 = (0..grid.num_points())
            .map(|p| {
                state.f.coeffs[unit][p] + (1.0 + state.rho.values[p]) * state.u.components[axis][p]
            })
            .sum();
        let shift = total / npts;
        state.f.coeffs[unit].iter_mut().for_each(|v| *v -= shift);
    }
    state.check_finite()?;
    Ok(state)
}

/// Generator by name.
pub fn make_initial_data_named(
    name: &str,
    grid: SpatialGrid,
    spec: HermiteSpec,
    amplitude: f64,
    seed: u64,
) -> Result<PerturbationState> {
    make_initial_data(name.parse()?, grid, spec, amplitude, seed)
}
