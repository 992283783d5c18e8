//! Functionals evaluated on states and trajectories: energy and dissipation,
//! conservation integrals, moment-system residuals, the Lyapunov monitor and
//! decay-rate regression.

mod fit;
mod lyapunov;
mod moments;

pub(crate) use fit::least_squares;
pub use fit::{fit_decay, DecayFit, DecayModel};
pub use lyapunov::{lyapunov_monitor, LyapunovReport};
pub use moments::{moment_residuals, moment_residuals_instantaneous, MomentResidualReport};

use serde::Serialize;

use crate::dynamics::PerturbationState;
use crate::error::{Error, Result};
use crate::spectral::{velocity_multi_indices, Spectral, VelocityForm};

/// Energy, dissipation and conservation integrals at one time.
///
/// `energy`, `dissipation` and its four parts are squared norms;
/// `micro_l2` and `bu_gap_l2` are (unsquared) `L^2` norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    /// `|(rho', u)|^2_{H^s} + |f|^2_{H^s_{x,v}}`.
    pub energy: f64,
    /// Sum of the four parts below.
    pub dissipation: f64,
    /// `|b - u|^2_{H^s}`.
    pub bu_gap_hs: f64,
    /// `|grad (rho', a, b)|^2_{H^{s-1}}`.
    pub grad_macro: f64,
    /// `sum_{|alpha| <= s} |{I - P} d^alpha f|^2_nu`.
    pub micro_nu: f64,
    /// `sum_{1 <= |beta|, |alpha| + |beta| <= s} |d^alpha_beta {I - P} f|^2_nu`.
    pub mixed_nu: f64,
    /// `int rho'`.
    pub mass_fluid: f64,
    /// `int a`.
    pub mass_particles: f64,
    /// `int (b + (1 + rho') u)`, unused axes zero.
    pub momentum: [f64; 3],
    pub micro_l2: f64,
    pub bu_gap_l2: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,energy,dissipation,bu_gap_hs,grad_macro,micro_nu,mixed_nu,mass_fluid,mass_particles,momentum_x,momentum_y,momentum_z,micro_l2,bu_gap_l2";

    /// One CSV row in [`Self::CSV_HEADER`] order, shortest round-trip floats.
    pub fn csv_row(&self) -> String {
        let v = [
            self.t,
            self.energy,
            self.dissipation,
            self.bu_gap_hs,
            self.grad_macro,
            self.micro_nu,
            self.mixed_nu,
            self.mass_fluid,
            self.mass_particles,
            self.momentum[0],
            self.momentum[1],
            self.momentum[2],
            self.micro_l2,
            self.bu_gap_l2,
        ];
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.energy,
            self.dissipation,
            self.bu_gap_hs,
            self.grad_macro,
            self.micro_nu,
            self.mixed_nu,
            self.mass_fluid,
            self.mass_particles,
            self.micro_l2,
            self.bu_gap_l2,
        ]
        .iter()
        .chain(&self.momentum)
        .all(|v| v.is_finite())
    }
}

/// Evaluate every functional of [`EnergyReport`] with Sobolev order `s <= 3`.
pub fn energy_report(sp: &Spectral, state: &PerturbationState, s: usize, t: f64) -> EnergyReport {
    assert!(s <= 3, "energy order must be at most 3");
    let grid = *sp.grid();
    let dim = grid.space_dim();
    let spec = state.spec();
    let rho_hat = sp.forward(&state.rho.values);
    let u_hat: Vec<_> = state.u.components.iter().map(|c| sp.forward(c)).collect();
    let fhat = sp.forward_kinetic(&state.f);
    let w_s = |p: usize| sp.sobolev_weight(p, s);

    let mut energy = sp.weighted_norm_sq(&rho_hat, w_s);
    for uh in &u_hat {
        energy += sp.weighted_norm_sq(uh, w_s);
    }
    energy += velocity_multi_indices(dim, s)
        .into_iter()
        .map(|beta| {
            let rest = s - beta.iter().sum::<usize>();
            let form = if beta == [0, 0, 0] {
                VelocityForm::identity(spec.basis_size())
            } else {
                VelocityForm::velocity_derivative(spec, beta)
            };
            sp.kinetic_form(&fhat, &form, |p| sp.sobolev_weight(p, rest))
        })
        .sum::<f64>();

    let mut bu_gap_hs = 0.0;
    let mut bu_gap_l2_sq = 0.0;
    for (axis, uh) in u_hat.iter().enumerate() {
        let bh = &fhat[spec.unit(axis)];
        let gap: Vec<_> = bh.iter().zip(uh).map(|(b, u)| b - u).collect();
        bu_gap_hs += sp.weighted_norm_sq(&gap, w_s);
        bu_gap_l2_sq += sp.weighted_norm_sq(&gap, |_| 1.0);
    }

    let lower = s.max(1) - 1;
    let grad_w = |p: usize| sp.wavenumber_norm(p).powi(2) * sp.sobolev_weight(p, lower);
    let mut grad_macro =
        sp.weighted_norm_sq(&rho_hat, grad_w) + sp.weighted_norm_sq(&fhat[0], grad_w);
    for axis in 0..dim {
        grad_macro += sp.weighted_norm_sq(&fhat[spec.unit(axis)], grad_w);
    }

    let micro_form = VelocityForm::nu_of_derivative(spec, [0, 0, 0], true);
    let micro_nu = sp.kinetic_form(&fhat, &micro_form, w_s);
    let mut mixed_nu = 0.0;
    for beta in velocity_multi_indices(dim, s) {
        let order: usize = beta.iter().sum();
        if order == 0 {
            continue;
        }
        let form = VelocityForm::nu_of_derivative(spec, beta, true);
        mixed_nu += sp.kinetic_form(&fhat, &form, |p| sp.sobolev_weight(p, s - order));
    }

    let micro_l2_sq: f64 = (0..spec.basis_size())
        .filter(|&i| spec.total_degree(i) >= 2)
        .map(|i| sp.weighted_norm_sq(&fhat[i], |_| 1.0))
        .sum();

    let mut momentum = [0.0; 3];
    for (axis, m) in momentum.iter_mut().enumerate().take(dim) {
        let b = state.f.momentum(axis);
        let u = &state.u.components[axis];
        let r = &state.rho.values;
        let total: Vec<f64> = (0..grid.num_points())
            .map(|p| b[p] + (1.0 + r[p]) * u[p])
            .collect();
        *m = grid.integrate(&total);
    }

    EnergyReport {
        t,
        energy,
        dissipation: bu_gap_hs + grad_macro + micro_nu + mixed_nu,
        bu_gap_hs,
        grad_macro,
        micro_nu,
        mixed_nu,
        mass_fluid: grid.integrate(&state.rho.values),
        mass_particles: grid.integrate(state.f.density()),
        momentum,
        micro_l2: micro_l2_sq.sqrt(),
        bu_gap_l2: bu_gap_l2_sq.sqrt(),
    }
}

/// Second-order derivative of a sampled series at interior sample `j`,
/// valid on nonuniform grids.
pub(crate) fn centered_derivative(t: &[f64], y: &[f64], j: usize) -> f64 {
    let (hm, hp) = (t[j] - t[j - 1], t[j + 1] - t[j]);
    (hm * hm * y[j + 1] - hp * hp * y[j - 1] - (hm * hm - hp * hp) * y[j]) / (hm * hp * (hm + hp))
}

/// Result of [`energy_inequality_monitor`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyInequalityReport {
    /// `min_t (-E'(t) / D(t))` over interior samples with `D > 0`.
    pub lambda: Option<f64>,
    /// `max_t E'(t)`: slack needed for `E' + 0 * D <= tol`.
    pub max_growth: f64,
    pub samples: usize,
}

/// Monitor `dE/dt + lambda D <= 0` along a sampled series of reports.
pub fn energy_inequality_monitor(reports: &[EnergyReport]) -> Result<EnergyInequalityReport> {
    if reports.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: reports.len(),
        });
    }
    let t: Vec<f64> = reports.iter().map(|r| r.t).collect();
    let e: Vec<f64> = reports.iter().map(|r| r.energy).collect();
    let mut lambda: Option<f64> = None;
    let mut max_growth = f64::NEG_INFINITY;
    for j in 1..reports.len() - 1 {
        let de = centered_derivative(&t, &e, j);
        max_growth = max_growth.max(de);
        let d = reports[j].dissipation;
        if d > 0.0 {
            let l = -de / d;
            lambda = Some(lambda.map_or(l, |m| m.min(l)));
        }
    }
    Ok(EnergyInequalityReport {
        lambda,
        max_growth,
        samples: reports.len() - 2,
    })
}
