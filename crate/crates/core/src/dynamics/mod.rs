//! Nonlinear right-hand side of the perturbative system and its IMEX
//! integrator.
//!
//! The fluid equations are evaluated in conservative form,
//!
//! ```text
//! rho_t      = -div D(rho u)
//! (rho u)_t  = -div D(D(rho u) u) - grad D(P(rho)) + mu Lap u - G
//! u_t        = D(((rho u)_t - rho_t u) / rho)
//! f_t        = -sum_a d_a (v_a f) + S + D(rho' S),
//! S          = L f + sum_a u_a A^dagger_a f + sum_a u_a e_a,
//! G_i        = D(rho S_{e_i}),
//! ```
//!
//! with `rho = 1 + rho'`, `D` the 2/3-rule projection and every product
//! dealiased. The friction `G` leaving the fluid is the very array entering
//! the particle momentum, so on band-limited states `int rho'`, `int a` and
//! `int (b + rho u)` have vanishing time derivative up to rounding.

mod imex;

pub use imex::{SimulationConfig, Trajectory};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermite::{HermiteSpec, Ladder, Stencil};
use crate::spectral::{KineticField, ScalarField, SpatialGrid, Spectral, VectorField};

/// Density below which a run is aborted.
pub const VACUUM_THRESHOLD: f64 = 0.1;

/// Viscosity and pressure law `P(rho) = c0 rho^gamma` around `(rho, u) = (1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    mu: f64,
    c0: f64,
    gamma: f64,
}

impl SystemParams {
    pub fn new(mu: f64, c0: f64, gamma: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(mu.is_finite() && mu >= 0.0) {
            problems.push(format!("mu must be nonnegative, got {mu}"));
        }
        if !(c0.is_finite() && c0 > 0.0) {
            problems.push(format!("c0 must be positive, got {c0}"));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            problems.push(format!("gamma must exceed 1, got {gamma}"));
        }
        if !problems.is_empty() {
            return Err(Error::InvalidParameter(problems.join("; ")));
        }
        Ok(Self { mu, c0, gamma })
    }

    /// Inviscid parameters.
    pub fn euler(c0: f64, gamma: f64) -> Result<Self> {
        Self::new(0.0, c0, gamma)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(mu, self.c0, self.gamma)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_inviscid(&self) -> bool {
        self.mu == 0.0
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.c0 * rho.powf(self.gamma)
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        self.c0 * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `P'(1)`.
    pub fn sound_speed_sq(&self) -> f64 {
        self.c0 * self.gamma
    }

    /// `(P'(1 + rho') / (1 + rho'), 1 / (1 + rho'))`.
    pub fn pressure_coeffs(&self, rho_pert: f64) -> Result<(f64, f64)> {
        let rho = 1.0 + rho_pert;
        if !(rho > 0.0) {
            return Err(Error::VacuumBreach {
                min_density: rho,
                index: 0,
            });
        }
        Ok((self.c0 * self.gamma * rho.powf(self.gamma - 2.0), 1.0 / rho))
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            mu: 0.0,
            c0: 1.0,
            gamma: 2.0,
        }
    }
}

/// `(rho', u, f)` on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub rho: ScalarField,
    pub u: VectorField,
    pub f: KineticField,
}

impl PerturbationState {
    pub fn new(rho: ScalarField, u: VectorField, f: KineticField) -> Result<Self> {
        if rho.grid != u.grid || rho.grid != f.grid {
            return Err(Error::Shape(
                "state components live on different grids".into(),
            ));
        }
        let s = Self { rho, u, f };
        s.check_finite()?;
        Ok(s)
    }

    pub fn zeros(grid: SpatialGrid, spec: HermiteSpec) -> Self {
        Self {
            rho: ScalarField::zeros(grid),
            u: VectorField::zeros(grid),
            f: KineticField::zeros(grid, spec),
        }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.rho.grid
    }

    pub fn spec(&self) -> HermiteSpec {
        self.f.spec
    }

    pub(crate) fn arrays(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.rho.values)
            .chain(self.u.components.iter())
            .chain(self.f.coeffs.iter())
    }

    pub(crate) fn arrays_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.rho.values)
            .chain(self.u.components.iter_mut())
            .chain(self.f.coeffs.iter_mut())
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.arrays().all(|a| a.iter().all(|v| v.is_finite())) {
            Ok(())
        } else {
            Err(Error::NonFinite("state".into()))
        }
    }

    /// Smallest `1 + rho'` and where it occurs.
    pub fn min_density(&self) -> (f64, usize) {
        self.rho
            .values
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |(m, i), (j, &r)| {
                if 1.0 + r < m {
                    (1.0 + r, j)
                } else {
                    (m, i)
                }
            })
    }

    pub fn check_vacuum(&self) -> Result<()> {
        let (m, index) = self.min_density();
        if m.is_nan() || m < VACUUM_THRESHOLD {
            return Err(Error::VacuumBreach {
                min_density: m,
                index,
            });
        }
        Ok(())
    }

    /// Largest absolute entry over all components.
    pub fn max_abs(&self) -> f64 {
        self.arrays()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + sum c_i t_i`.
    pub fn combine(&self, terms: &[(f64, &Tendency)]) -> PerturbationState {
        let mut out = self.clone();
        for &(c, t) in terms {
            for (dst, src) in out.arrays_mut().zip(t.arrays()) {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        out
    }

    /// Componentwise difference `self - other`.
    pub fn difference(&self, other: &PerturbationState) -> PerturbationState {
        let mut out = self.clone();
        for (dst, src) in out.arrays_mut().zip(other.arrays()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= s;
            }
        }
        out
    }

    /// Multiply every component by `s`.
    pub fn scaled(&self, s: f64) -> PerturbationState {
        let mut out = self.clone();
        for arr in out.arrays_mut() {
            arr.iter_mut().for_each(|v| *v *= s);
        }
        out
    }
}

/// Time derivative of a [`PerturbationState`], same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub rho: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
}

impl Tendency {
    pub fn zeros(grid: SpatialGrid, spec: HermiteSpec) -> Self {
        let n = grid.num_points();
        Self {
            rho: vec![0.0; n],
            u: vec![vec![0.0; n]; grid.space_dim()],
            f: vec![vec![0.0; n]; spec.basis_size()],
        }
    }

    pub(crate) fn arrays(&self) -> impl Iterator<Item = &Vec<f64>> {
        std::iter::once(&self.rho)
            .chain(self.u.iter())
            .chain(self.f.iter())
    }

    pub(crate) fn arrays_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.rho)
            .chain(self.u.iter_mut())
            .chain(self.f.iter_mut())
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays()
            .flat_map(|a| a.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.arrays().all(|a| a.iter().all(|v| v.is_finite()))
    }

    /// `self - other`.
    pub fn minus(&self, other: &Tendency) -> Tendency {
        let mut out = self.clone();
        for (d, s) in out.arrays_mut().zip(other.arrays()) {
            for (x, y) in d.iter_mut().zip(s) {
                *x -= y;
            }
        }
        out
    }
}

/// Precomputed operators for one (grid, truncation, parameters) triple.
#[derive(Debug, Clone)]
pub struct Dynamics {
    params: SystemParams,
    grid: SpatialGrid,
    spec: HermiteSpec,
    spectral: Spectral,
    vmul: Vec<Stencil>,
    raise: Vec<Stencil>,
    degree: Vec<f64>,
    /// `i xi_axis` per mode (Nyquist dropped).
    ik: Vec<Vec<Complex64>>,
    /// `|xi|^2` per mode.
    xi2: Vec<f64>,
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl Dynamics {
    pub fn new(grid: SpatialGrid, spec: HermiteSpec, params: SystemParams) -> Result<Self> {
        if spec.velocity_dim() != grid.space_dim() {
            return Err(Error::Shape(format!(
                "velocity_dim {} must equal space_dim {}",
                spec.velocity_dim(),
                grid.space_dim()
            )));
        }
        let dim = grid.space_dim();
        let spectral = Spectral::new(grid);
        Ok(Self {
            params,
            grid,
            spec,
            vmul: (0..dim)
                .map(|a| Stencil::new(spec, spec, a, Ladder::VMultiply))
                .collect(),
            raise: (0..dim)
                .map(|a| Stencil::new(spec, spec, a, Ladder::Raising))
                .collect(),
            degree: (0..spec.basis_size())
                .map(|i| spec.total_degree(i) as f64)
                .collect(),
            ik: (0..dim)
                .map(|a| {
                    (0..grid.num_points())
                        .map(|p| spectral.derivative_symbol(p, a, 1))
                        .collect()
                })
                .collect(),
            xi2: (0..grid.num_points())
                .map(|p| spectral.wavenumber_norm(p).powi(2))
                .collect(),
            spectral,
        })
    }

    pub fn params(&self) -> SystemParams {
        self.params
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    pub fn spec(&self) -> HermiteSpec {
        self.spec
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    fn check_state(&self, state: &PerturbationState) -> Result<()> {
        if state.grid() != self.grid || state.spec() != self.spec {
            return Err(Error::Shape(
                "state does not match the grid / truncation of the solver".into(),
            ));
        }
        Ok(())
    }

    /// Project every component onto the dealiased band.
    pub fn band_limit(&self, state: &PerturbationState) -> PerturbationState {
        let mut out = state.clone();
        for arr in out.arrays_mut() {
            *arr = self.spectral.dealias(arr);
        }
        out
    }

    /// Forward transform, masked to the dealiased band.
    fn hat_d(&self, values: &[f64]) -> Vec<Complex64> {
        let mut h = self.spectral.forward(values);
        self.spectral.dealias_hat(&mut h);
        h
    }

    /// Full right-hand side.
    pub fn rhs(&self, state: &PerturbationState) -> Result<Tendency> {
        self.check_state(state)?;
        state.check_vacuum()?;
        let sp = &self.spectral;
        let npts = self.grid.num_points();
        let dim = self.grid.space_dim();
        let nb = self.spec.basis_size();
        let rho_p = &state.rho.values;
        let rho: Vec<f64> = rho_p.iter().map(|r| 1.0 + r).collect();
        let u = &state.u.components;
        let c = &state.f.coeffs;

        // Particle equation.
        let chat: Vec<Vec<Complex64>> = c.iter().map(|a| sp.forward(a)).collect();
        let mut f_hat = vec![vec![czero(); npts]; nb];
        for (axis, st) in self.vmul.iter().enumerate() {
            for &(s, d, w) in st.terms() {
                let (src, dst, ik) = (&chat[s], &mut f_hat[d], &self.ik[axis]);
                for p in 0..npts {
                    dst[p] -= src[p] * ik[p] * w;
                }
            }
        }
        let mut s_hat: Vec<Vec<Complex64>> = chat
            .iter()
            .zip(&self.degree)
            .map(|(h, &k)| h.iter().map(|&x| x * -k).collect())
            .collect();
        let mut scratch = vec![0.0; npts];
        for (axis, st) in self.raise.iter().enumerate() {
            let mut cache: Vec<Option<Vec<Complex64>>> = vec![None; nb];
            for &(s, d, w) in st.terms() {
                let prod = cache[s].get_or_insert_with(|| {
                    for p in 0..npts {
                        scratch[p] = u[axis][p] * c[s][p];
                    }
                    self.hat_d(&scratch)
                });
                for (x, y) in s_hat[d].iter_mut().zip(prod.iter()) {
                    *x += *y * w;
                }
            }
        }
        for axis in 0..dim {
            let uh = sp.forward(&u[axis]);
            let unit = self.spec.unit(axis);
            for (x, y) in s_hat[unit].iter_mut().zip(&uh) {
                *x += *y;
            }
        }
        // D(rho S) = S + D(rho' S), with S band-limited.
        let mut source_hat = Vec::with_capacity(nb);
        for sh in s_hat {
            let s_phys = sp.inverse(sh.clone());
            for p in 0..npts {
                scratch[p] = rho_p[p] * s_phys[p];
            }
            let rs = self.hat_d(&scratch);
            source_hat.push(sh.iter().zip(&rs).map(|(a, b)| a + b).collect::<Vec<_>>());
        }

        // Fluid equations.
        let m: Vec<Vec<f64>> = (0..dim).map(|a| sp.product(&rho, &u[a])).collect();
        let mut rho_t_hat = vec![czero(); npts];
        for (axis, ma) in m.iter().enumerate() {
            let mh = sp.forward(ma);
            for p in 0..npts {
                rho_t_hat[p] -= mh[p] * self.ik[axis][p];
            }
        }
        let pressure: Vec<f64> = rho.iter().map(|&r| self.params.pressure(r)).collect();
        let p_hat = self.hat_d(&pressure);
        let mut u_t = Vec::with_capacity(dim);
        let rho_t = sp.inverse(rho_t_hat.clone());
        for i in 0..dim {
            let mut acc = vec![czero(); npts];
            for j in 0..dim {
                for p in 0..npts {
                    scratch[p] = m[i][p] * u[j][p];
                }
                let flux = self.hat_d(&scratch);
                for p in 0..npts {
                    acc[p] -= flux[p] * self.ik[j][p];
                }
            }
            for p in 0..npts {
                acc[p] -= p_hat[p] * self.ik[i][p];
            }
            if self.params.mu > 0.0 {
                let uh = sp.forward(&u[i]);
                for p in 0..npts {
                    acc[p] -= uh[p] * (self.params.mu * self.xi2[p]);
                }
            }
            let g = &source_hat[self.spec.unit(i)];
            for p in 0..npts {
                acc[p] -= g[p];
            }
            let mom_t = sp.inverse(acc);
            for p in 0..npts {
                scratch[p] = (mom_t[p] - rho_t[p] * u[i][p]) / rho[p];
            }
            u_t.push(sp.dealias(&scratch));
        }

        let f_t: Vec<Vec<f64>> = f_hat
            .into_iter()
            .zip(source_hat)
            .map(|(t, s)| sp.inverse(t.iter().zip(&s).map(|(a, b)| a + b).collect()))
            .collect();

        let out = Tendency {
            rho: rho_t,
            u: u_t,
            f: f_t,
        };
        if !out.is_finite() {
            return Err(Error::NonFinite("right-hand side".into()));
        }
        Ok(out)
    }

    /// Constant-coefficient stiff part `A y`: Fokker-Planck relaxation, the
    /// friction exchange `u <-> b` and viscosity, all at `rho = 1`.
    pub fn implicit_apply(&self, y: &PerturbationState) -> Tendency {
        let mut out = Tendency::zeros(self.grid, self.spec);
        let npts = self.grid.num_points();
        for (k, (dst, src)) in out.f.iter_mut().zip(&y.f.coeffs).enumerate() {
            let deg = self.degree[k];
            if deg == 1.0 {
                continue;
            }
            for p in 0..npts {
                dst[p] = -deg * src[p];
            }
        }
        for axis in 0..self.grid.space_dim() {
            let unit = self.spec.unit(axis);
            let uu = &y.u.components[axis];
            let bb = &y.f.coeffs[unit];
            let visc = if self.params.mu > 0.0 {
                self.spectral.laplacian(uu)
            } else {
                vec![0.0; npts]
            };
            for p in 0..npts {
                out.u[axis][p] = -uu[p] + bb[p] + self.params.mu * visc[p];
                out.f[unit][p] = uu[p] - bb[p];
            }
        }
        out
    }

    /// Solve `(I - h A) y = r`.
    pub fn implicit_solve(&self, r: &PerturbationState, h: f64) -> PerturbationState {
        let mut y = r.clone();
        let npts = self.grid.num_points();
        for (k, arr) in y.f.coeffs.iter_mut().enumerate() {
            let deg = self.degree[k];
            if deg != 1.0 && deg != 0.0 {
                let s = 1.0 / (1.0 + h * deg);
                arr.iter_mut().for_each(|v| *v *= s);
            }
        }
        let sp = &self.spectral;
        for axis in 0..self.grid.space_dim() {
            let unit = self.spec.unit(axis);
            let ru = &r.u.components[axis];
            let rb = &r.f.coeffs[unit];
            if self.params.mu > 0.0 {
                let uh = sp.forward(ru);
                let bh = sp.forward(rb);
                let mut yu = vec![czero(); npts];
                let mut yb = vec![czero(); npts];
                for p in 0..npts {
                    let a = 1.0 + h * (1.0 + self.params.mu * self.xi2[p]);
                    let det = a * (1.0 + h) - h * h;
                    yu[p] = ((1.0 + h) * uh[p] + h * bh[p]) / det;
                    yb[p] = (h * uh[p] + a * bh[p]) / det;
                }
                y.u.components[axis] = sp.inverse(yu);
                y.f.coeffs[unit] = sp.inverse(yb);
            } else {
                let a = 1.0 + h;
                let det = a * a - h * h;
                for p in 0..npts {
                    y.u.components[axis][p] = (a * ru[p] + h * rb[p]) / det;
                    y.f.coeffs[unit][p] = (h * ru[p] + a * rb[p]) / det;
                }
            }
        }
        y
    }

    /// Largest stable step suggested by the transport CFL condition.
    pub fn cfl_limit(&self, state: &PerturbationState) -> f64 {
        let vmax = (2.0 * self.spec.degree_cap() as f64 + 1.0).sqrt();
        let umax = state
            .u
            .components
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        0.4 * self.grid.dx() / (vmax + umax)
    }
}

/// One-off right-hand side evaluation.
pub fn rhs(state: &PerturbationState, params: SystemParams) -> Result<Tendency> {
    Dynamics::new(state.grid(), state.spec(), params)?.rhs(state)
}

/// One-off IMEX step.
pub fn imex_step(
    state: &PerturbationState,
    params: SystemParams,
    dt: f64,
) -> Result<PerturbationState> {
    Dynamics::new(state.grid(), state.spec(), params)?.step(state, dt)
}

/// `(P'(1 + rho') / (1 + rho'), 1 / (1 + rho'))`.
pub fn pressure_coeffs(params: &SystemParams, rho_pert: f64) -> Result<(f64, f64)> {
    params.pressure_coeffs(rho_pert)
}
