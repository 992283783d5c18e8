//! Per-wavenumber analysis of the linearized system.
//!
//! A mode carries `(rho, u, f)` Fourier amplitudes at the wavevector
//! `xi = |xi| e_1`. Rotation covariance makes this direction sufficient, and
//! in three velocity dimensions the transverse degree of `f` stays at most
//! one, which is exactly the layout of [`HermiteSpec::three_dim`].

mod decay;
mod propagate;
mod semigroup;
#[cfg(test)]
mod tests;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::SystemParams;
use crate::error::{Error, Result};
use crate::hermite::{HermiteSpec, VelocityCoeffs};

pub use decay::{slowest_mode_rate, verify_mode_decay, ModeDecayRow, ModeDecayTable};
pub use propagate::{block_partition, dormand_prince, expm, propagator};
pub use semigroup::{
    micro_gap_decay, semigroup_decay, MicroGapRates, ProfileKind, SemigroupSeries, SpectrumProfile,
};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub xi: f64,
    pub rho: Complex64,
    pub u: Vec<Complex64>,
    pub f: VelocityCoeffs<Complex64>,
}

/// Quadratic quantities of a mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeNorms {
    pub rho: f64,
    pub u: f64,
    pub f: f64,
    pub micro: f64,
    pub gap: f64,
}

impl ModeNorms {
    pub fn total(&self) -> f64 {
        self.rho + self.u + self.f
    }
}

impl ModeState {
    pub fn new(
        xi: f64,
        rho: Complex64,
        u: Vec<Complex64>,
        f: VelocityCoeffs<Complex64>,
    ) -> Result<Self> {
        if !xi.is_finite() || xi < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "|xi| must be finite and nonnegative, got {xi}"
            )));
        }
        if u.len() != f.spec().velocity_dim() {
            return Err(Error::Shape(format!(
                "velocity has {} components, expected {}",
                u.len(),
                f.spec().velocity_dim()
            )));
        }
        let m = Self { xi, rho, u, f };
        if !m.is_finite() {
            return Err(Error::NonFinite("mode state".into()));
        }
        Ok(m)
    }

    pub fn zeros(spec: HermiteSpec, xi: f64) -> Self {
        Self {
            xi,
            rho: Complex64::new(0.0, 0.0),
            u: vec![Complex64::new(0.0, 0.0); spec.velocity_dim()],
            f: VelocityCoeffs::zeros(spec),
        }
    }

    pub fn spec(&self) -> HermiteSpec {
        self.f.spec()
    }

    /// Length of the flat layout `[rho, u.., f..]`.
    pub fn dimension(spec: HermiteSpec) -> usize {
        1 + spec.velocity_dim() + spec.basis_size()
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        let mut v = Vec::with_capacity(Self::dimension(self.spec()));
        v.push(self.rho);
        v.extend_from_slice(&self.u);
        v.extend_from_slice(self.f.coeffs());
        DVector::from_vec(v)
    }

    pub fn from_vector(spec: HermiteSpec, xi: f64, v: &DVector<Complex64>) -> Self {
        let d = spec.velocity_dim();
        assert_eq!(v.len(), Self::dimension(spec), "mode vector length");
        let mut f = VelocityCoeffs::zeros(spec);
        f.coeffs_mut().copy_from_slice(&v.as_slice()[1 + d..]);
        Self {
            xi,
            rho: v[0],
            u: v.as_slice()[1..1 + d].to_vec(),
            f,
        }
    }

    pub fn is_finite(&self) -> bool {
        let ok = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        ok(&self.rho) && self.u.iter().all(ok) && self.f.coeffs().iter().all(ok)
    }

    pub fn norms(&self) -> ModeNorms {
        let spec = self.spec();
        let mut micro = 0.0;
        let mut gap = 0.0;
        for (i, c) in self.f.coeffs().iter().enumerate() {
            if spec.total_degree(i) >= 2 {
                micro += c.norm_sqr();
            }
        }
        for (a, u) in self.u.iter().enumerate() {
            gap += (self.f.coeffs()[spec.unit(a)] - u).norm_sqr();
        }
        ModeNorms {
            rho: self.rho.norm_sqr(),
            u: self.u.iter().map(|z| z.norm_sqr()).sum(),
            f: self.f.norm_sq(),
            micro,
            gap,
        }
    }

    /// `P'(1)|rho|^2 + |u|^2 + |f|^2`.
    pub fn plain_energy(&self, params: &SystemParams) -> f64 {
        let n = self.norms();
        params.pressure_derivative(1.0) * n.rho + n.u + n.f
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            xi: self.xi,
            rho: self.rho * s,
            u: self.u.iter().map(|z| z * s).collect(),
            f: self.f.scaled(s),
        }
    }
}

/// Time derivative of a mode under the linearized flow.
pub fn mode_rhs(m: &ModeState, params: &SystemParams) -> ModeState {
    let spec = m.spec();
    let xi = m.xi;
    let p1 = params.pressure_derivative(1.0);
    let mut out = ModeState::zeros(spec, xi);
    out.rho = -I * xi * m.u[0];
    for (a, u) in m.u.iter().enumerate() {
        let b = m.f.coeffs()[spec.unit(a)];
        out.u[a] = b - u - u * (params.mu() * xi * xi);
    }
    out.u[0] -= I * xi * p1 * m.rho;
    let transport = m.f.v_multiply(0);
    let relax = m.f.fokker_planck();
    for ((o, t), l) in out
        .f
        .coeffs_mut()
        .iter_mut()
        .zip(transport.coeffs())
        .zip(relax.coeffs())
    {
        *o = l - I * xi * t;
    }
    for (a, u) in m.u.iter().enumerate() {
        out.f.coeffs_mut()[spec.unit(a)] += u;
    }
    out
}

/// Dense generator of [`mode_rhs`] in the flat layout.
pub fn generator(spec: HermiteSpec, params: &SystemParams, xi: f64) -> DMatrix<Complex64> {
    let n = ModeState::dimension(spec);
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        let col = mode_rhs(&ModeState::from_vector(spec, xi, &e), params).to_vector();
        a.set_column(j, &col);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Scaling-and-squaring matrix exponential.
    Expm,
    /// Adaptive Dormand-Prince integration.
    Rk,
}

/// Evolve a mode for time `t >= 0`.
pub fn evolve_mode(
    m0: &ModeState,
    params: &SystemParams,
    t: f64,
    method: Method,
) -> Result<ModeState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(m0.clone());
    }
    let a = generator(m0.spec(), params, m0.xi);
    let y0 = m0.to_vector();
    let y = match method {
        Method::Expm => propagator(&a, t) * y0,
        Method::Rk => dormand_prince(&a, &y0, t, 1e-12, 1e-14)?,
    };
    Ok(ModeState::from_vector(m0.spec(), m0.xi, &y))
}

/// Evolve a set of modes sharing `xi` to each time in `times`.
pub fn evolve_modes(
    modes: &[ModeState],
    params: &SystemParams,
    times: &[f64],
) -> Vec<Vec<ModeState>> {
    let Some(first) = modes.first() else {
        return Vec::new();
    };
    let a = generator(first.spec(), params, first.xi);
    times
        .iter()
        .map(|&t| {
            let p = propagator(&a, t);
            modes
                .iter()
                .map(|m| ModeState::from_vector(m.spec(), m.xi, &(&p * m.to_vector())))
                .collect()
        })
        .collect()
}

/// Dissipation rate `|b - u|^2 + sum_{deg >= 2} deg |f_k|^2 + mu |xi|^2 |u|^2`.
pub fn mode_dissipation(m: &ModeState, params: &SystemParams) -> f64 {
    let spec = m.spec();
    let n = m.norms();
    let mut d = n.gap + params.mu() * m.xi * m.xi * n.u;
    for (i, c) in m.f.coeffs().iter().enumerate() {
        let deg = spec.total_degree(i);
        if deg >= 2 {
            d += deg as f64 * c.norm_sqr();
        }
    }
    d
}

/// `Re <m, rhs(m)> + dissipation`, weighted by `P'(1)` in the density slot.
/// Vanishes identically for the linearized flow.
pub fn energy_identity_residual(m: &ModeState, params: &SystemParams) -> f64 {
    let r = mode_rhs(m, params);
    let p1 = params.pressure_derivative(1.0);
    let mut rate = p1 * (m.rho.conj() * r.rho).re;
    rate +=
        m.u.iter()
            .zip(&r.u)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>();
    rate +=
        m.f.coeffs()
            .iter()
            .zip(r.f.coeffs())
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>();
    rate + mode_dissipation(m, params)
}

/// Real part of the mixed functional built from `b`, the second moments of
/// the microscopic part, and `a`.
pub fn mixed_functional(m: &ModeState) -> f64 {
    let spec = m.spec();
    let xi = m.xi;
    let micro = m.f.project_macro().micro;
    let mom = m.f.moments();
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..spec.velocity_dim() {
        s += 2.0 * I * xi * mom.b[j] * micro.gamma_moment(0, j).conj();
    }
    s -= mom.a * (I * xi * mom.b[0]).conj();
    s.re / (1.0 + xi * xi)
}

/// Augmented mode functional with weights `tau4` and `tau5`.
pub fn mode_energy_f(m: &ModeState, params: &SystemParams, tau4: f64, tau5: f64) -> f64 {
    let xi = m.xi;
    let cross = (m.u[0] * (I * xi * m.rho).conj()).re / (1.0 + xi * xi);
    m.plain_energy(params) + tau4 * mixed_functional(m) + tau5 * cross
}

/// Sampled two-sided bounds of the augmented functional against the plain energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equivalence {
    pub tau4: f64,
    pub tau5: f64,
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

pub const DEFAULT_TAU4: f64 = 0.1;
pub const DEFAULT_TAU5: f64 = 0.01;

/// Random mode with `|xi| <= xi_max` and unit plain energy.
pub fn random_mode(
    spec: HermiteSpec,
    params: &SystemParams,
    xi_max: f64,
    rng: &mut impl Rng,
) -> ModeState {
    let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let rho = c();
    let u = (0..spec.velocity_dim()).map(|_| c()).collect();
    let f =
        VelocityCoeffs::new(spec, (0..spec.basis_size()).map(|_| c()).collect()).expect("finite");
    let xi = rng.random_range(0.0..=xi_max);
    let m = ModeState { xi, rho, u, f };
    let e = m.plain_energy(params);
    m.scaled(1.0 / e.sqrt())
}

/// Certify the augmented functional by sampling random modes with
/// `|xi| <= xi_max`. Fails when the lower bound is not positive.
pub fn certify_energy_f(
    spec: HermiteSpec,
    params: &SystemParams,
    tau4: f64,
    tau5: f64,
    samples: usize,
    xi_max: f64,
    seed: u64,
) -> Result<Equivalence> {
    if !(tau4 >= 0.0 && tau5 >= 0.0 && tau4.is_finite() && tau5.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau weights must be nonnegative, got ({tau4}, {tau5})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for _ in 0..samples {
        let m = random_mode(spec, params, xi_max, &mut rng);
        let r = mode_energy_f(&m, params, tau4, tau5) / m.plain_energy(params);
        lower = lower.min(r);
        upper = upper.max(r);
    }
    if !(lower > 0.0) {
        return Err(Error::TauEquivalence {
            lo: lower,
            hi: upper,
        });
    }
    Ok(Equivalence {
        tau4,
        tau5,
        lower,
        upper,
        samples,
    })
}

/// Unit-energy initial modes spanning the dynamical blocks: pure density,
/// longitudinal velocity, transverse velocity (three dimensions only), a
/// second-degree microscopic mode, and their equal-weight mix.
pub fn canonical_modes(spec: HermiteSpec, xi: f64) -> Vec<ModeState> {
    let one = Complex64::new(1.0, 0.0);
    let mut set = Vec::new();
    let mut m = ModeState::zeros(spec, xi);
    m.rho = one;
    set.push(m);
    let mut m = ModeState::zeros(spec, xi);
    m.u[0] = one;
    set.push(m);
    if spec.velocity_dim() == 3 {
        let mut m = ModeState::zeros(spec, xi);
        m.u[1] = one;
        set.push(m);
    }
    let mut m = ModeState::zeros(spec, xi);
    let e2 = spec.index([2, 0, 0]).expect("degree cap is at least two");
    m.f.coeffs_mut()[e2] = one;
    set.push(m);
    let mut mix = ModeState::zeros(spec, xi);
    for s in &set {
        mix.rho += s.rho;
        for (a, b) in mix.u.iter_mut().zip(&s.u) {
            *a += b;
        }
        mix.f = mix.f.add(&s.f);
    }
    let norm = mix.norms().total().sqrt();
    set.push(mix.scaled(1.0 / norm));
    set
}
