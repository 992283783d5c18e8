//! Samplewise check of
//! `d/dt E_k + lambda E_k <= C |grad^k (rho'^L, a^L, b^L)|^2` with
//! `E_k = |grad^k (rho', u)|^2 + |grad^k f|^2`.

use serde::Serialize;

use super::centered_derivative;
use crate::dynamics::PerturbationState;
use crate::error::{Error, Result};
use crate::spectral::Spectral;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    pub k: usize,
    pub r0: f64,
    pub c: f64,
    /// Interior sample times.
    pub times: Vec<f64>,
    /// `E_k` at the interior samples.
    pub energy: Vec<f64>,
    /// Centered-difference `dE_k/dt`.
    pub energy_rate: Vec<f64>,
    /// `|grad^k (rho'^L, a^L, b^L)|^2`.
    pub low_macro: Vec<f64>,
    /// Largest `lambda` satisfying the inequality at every sample with
    /// `E_k > 0`; `None` when the window is identically zero.
    pub lambda: Option<f64>,
    /// Samples where `dE_k/dt > C R` (the inequality fails for every
    /// `lambda >= 0`), with the energy at that time.
    pub violations: Vec<(f64, f64)>,
}

fn derivative_energy(sp: &Spectral, s: &PerturbationState, k: usize) -> f64 {
    let mut e = sp.gradient_power_norm_sq(&s.rho.values, k);
    for c in &s.u.components {
        e += sp.gradient_power_norm_sq(c, k);
    }
    for c in &s.f.coeffs {
        e += sp.gradient_power_norm_sq(c, k);
    }
    e
}

fn low_macro(sp: &Spectral, s: &PerturbationState, k: usize, r0: f64) -> f64 {
    let w = |p: usize| sp.wavenumber_norm(p).powi(2 * k as i32);
    let mut fields = vec![&s.rho.values[..], s.f.density()];
    for axis in 0..sp.grid().space_dim() {
        fields.push(s.f.momentum(axis));
    }
    fields
        .into_iter()
        .map(|f| sp.weighted_norm_sq(&sp.low_pass_hat(&sp.forward(f), r0), w))
        .sum()
}

pub fn lyapunov_monitor(
    sp: &Spectral,
    window: &[PerturbationState],
    times: &[f64],
    k: usize,
    r0: f64,
    c: f64,
) -> Result<LyapunovReport> {
    if window.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: window.len(),
        });
    }
    if times.len() != window.len() {
        return Err(Error::Shape("times and snapshots differ in length".into()));
    }
    if !(2..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "k must be 2 or 3, got {k}"
        )));
    }
    if !(r0 > 0.0 && c >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need r0 > 0 and C >= 0, got r0 = {r0}, C = {c}"
        )));
    }
    let e: Vec<f64> = window.iter().map(|s| derivative_energy(sp, s, k)).collect();
    let mut rep = LyapunovReport {
        k,
        r0,
        c,
        times: Vec::new(),
        energy: Vec::new(),
        energy_rate: Vec::new(),
        low_macro: Vec::new(),
        lambda: None,
        violations: Vec::new(),
    };
    for j in 1..window.len() - 1 {
        let de = centered_derivative(times, &e, j);
        let r = low_macro(sp, &window[j], k, r0);
        let margin = c * r - de;
        if margin < 0.0 {
            rep.violations.push((times[j], e[j]));
        }
        if e[j] > 0.0 {
            let l = margin / e[j];
            rep.lambda = Some(rep.lambda.map_or(l, |m: f64| m.min(l)));
        }
        rep.times.push(times[j]);
        rep.energy.push(e[j]);
        rep.energy_rate.push(de);
        rep.low_macro.push(r);
    }
    Ok(rep)
}
