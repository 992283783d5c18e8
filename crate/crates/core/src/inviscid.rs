//! Paired viscous / inviscid experiments: the difference functional between
//! trajectories with the same initial data and its convergence order in `mu`.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::least_squares;
use crate::dynamics::{Dynamics, PerturbationState, SimulationConfig, SystemParams, Trajectory};
use crate::error::{Error, Result};
use crate::hermite::HermiteSpec;
use crate::spectral::{velocity_multi_indices, SpatialGrid, Spectral, VelocityForm};

/// Time integrals (trapezoid rule on the sampling grid) of the dissipative
/// parts of the difference functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratedTerms {
    /// `int |grad (rho, a, b)|^2`.
    pub grad_macro: f64,
    /// `int |b - u|^2_{H^1}`.
    pub gap_h1: f64,
    /// `int sum_{|alpha| <= 1} |{I - P} d^alpha f|^2_nu`.
    pub micro_nu: f64,
    /// `int |grad_v {I - P} f|^2_nu`.
    pub velocity_micro_nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceReport {
    pub mu: f64,
    /// `sup_t |(rho, u)|^2_{H^1} + |f|^2_{H^1_{x,v}}` of the difference.
    pub sup_h1_sq: f64,
    /// Sample time at which the supremum is attained.
    pub peak_time: f64,
    pub integrated: IntegratedTerms,
    pub times: Vec<f64>,
    /// The `H^1` quantity at each sample.
    pub h1_sq: Vec<f64>,
}

impl DifferenceReport {
    pub fn is_zero(&self) -> bool {
        self.sup_h1_sq == 0.0
            && self.integrated.grad_macro == 0.0
            && self.integrated.gap_h1 == 0.0
            && self.integrated.micro_nu == 0.0
            && self.integrated.velocity_micro_nu == 0.0
    }
}

struct Forms {
    h1_v: Vec<([usize; 3], VelocityForm)>,
    micro: VelocityForm,
    grad_v_micro: Vec<VelocityForm>,
}

impl Forms {
    fn new(spec: HermiteSpec, dim: usize) -> Self {
        let h1_v = velocity_multi_indices(dim, 1)
            .into_iter()
            .filter(|b| b.iter().sum::<usize>() == 1)
            .map(|b| (b, VelocityForm::velocity_derivative(spec, b)))
            .collect();
        let grad_v_micro = velocity_multi_indices(dim, 1)
            .into_iter()
            .filter(|b| b.iter().sum::<usize>() == 1)
            .map(|b| VelocityForm::nu_of_derivative(spec, b, true))
            .collect();
        Self {
            h1_v,
            micro: VelocityForm::nu_of_derivative(spec, [0, 0, 0], true),
            grad_v_micro,
        }
    }
}

/// Pointwise-in-time quantities of one difference state: the `H^1` norm and
/// the four integrands.
fn sample(sp: &Spectral, forms: &Forms, d: &PerturbationState) -> (f64, [f64; 4]) {
    let spec = d.spec();
    let dim = sp.grid().space_dim();
    let h1 = |p: usize| sp.sobolev_weight(p, 1);
    let grad = |p: usize| sp.wavenumber_norm(p).powi(2);
    let one = |_: usize| 1.0;
    let rho_hat = sp.forward(&d.rho.values);
    let u_hat: Vec<_> = d.u.components.iter().map(|c| sp.forward(c)).collect();
    let fhat = sp.forward_kinetic(&d.f);

    let mut norm = sp.weighted_norm_sq(&rho_hat, h1);
    for uh in &u_hat {
        norm += sp.weighted_norm_sq(uh, h1);
    }
    norm += fhat.iter().map(|c| sp.weighted_norm_sq(c, h1)).sum::<f64>();
    for (_, form) in &forms.h1_v {
        norm += sp.kinetic_form(&fhat, form, one);
    }

    let mut grad_macro = sp.weighted_norm_sq(&rho_hat, grad) + sp.weighted_norm_sq(&fhat[0], grad);
    let mut gap = 0.0;
    for (axis, uh) in u_hat.iter().enumerate().take(dim) {
        let bh = &fhat[spec.unit(axis)];
        grad_macro += sp.weighted_norm_sq(bh, grad);
        let g: Vec<_> = bh.iter().zip(uh).map(|(b, u)| b - u).collect();
        gap += sp.weighted_norm_sq(&g, h1);
    }
    let micro = sp.kinetic_form(&fhat, &forms.micro, h1);
    let vmicro: f64 = forms
        .grad_v_micro
        .iter()
        .map(|f| sp.kinetic_form(&fhat, f, one))
        .sum();
    (norm, [grad_macro, gap, micro, vmicro])
}

/// Difference functional between two trajectories sampled at the same times.
/// Symmetric in its arguments.
pub fn difference_report(mu: f64, a: &Trajectory, b: &Trajectory) -> Result<DifferenceReport> {
    if a.times != b.times
        || a.snapshots.len() != a.times.len()
        || b.snapshots.len() != b.times.len()
    {
        return Err(Error::Shape(
            "trajectories must share sample times and keep snapshots".into(),
        ));
    }
    let Some(first) = a.snapshots.first() else {
        return Err(Error::InsufficientSnapshots { needed: 1, got: 0 });
    };
    let sp = Spectral::new(first.grid());
    let forms = Forms::new(first.spec(), first.grid().space_dim());
    let samples: Vec<(f64, [f64; 4])> = a
        .snapshots
        .par_iter()
        .zip(&b.snapshots)
        .map(|(x, y)| sample(&sp, &forms, &x.difference(y)))
        .collect();
    let mut sup = 0.0;
    let mut peak = a.times[0];
    let mut totals = [0.0; 4];
    for (j, (norm, terms)) in samples.iter().enumerate() {
        if *norm > sup {
            sup = *norm;
            peak = a.times[j];
        }
        if j > 0 {
            let h = a.times[j] - a.times[j - 1];
            for (t, (now, prev)) in totals.iter_mut().zip(terms.iter().zip(&samples[j - 1].1)) {
                *t += 0.5 * h * (now + prev);
            }
        }
    }
    Ok(DifferenceReport {
        mu,
        sup_h1_sq: sup,
        peak_time: peak,
        integrated: IntegratedTerms {
            grad_macro: totals[0],
            gap_h1: totals[1],
            micro_nu: totals[2],
            velocity_micro_nu: totals[3],
        },
        times: a.times.clone(),
        h1_sq: samples.iter().map(|s| s.0).collect(),
    })
}

/// Output of [`paired_run`].
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub inviscid: Trajectory,
    pub reports: Vec<DifferenceReport>,
}

/// Simulate the inviscid system once and each viscosity in `mus` once from the
/// same initial data, then compare every viscous run with the inviscid one.
/// The pressure law is taken from `params`; its viscosity is ignored.
pub fn paired_run(
    grid: SpatialGrid,
    spec: HermiteSpec,
    params: SystemParams,
    initial: &PerturbationState,
    mus: &[f64],
    cfg: &SimulationConfig,
) -> Result<PairedRun> {
    let mut cfg = *cfg;
    cfg.keep_snapshots = true;
    let run = |mu: f64| -> Result<Trajectory> {
        Dynamics::new(grid, spec, params.with_mu(mu)?)?.simulate(initial, &cfg)
    };
    let inviscid = run(0.0)?;
    let runs: Vec<Result<Trajectory>> = mus.par_iter().map(|&mu| run(mu)).collect();
    let mut reports = Vec::with_capacity(mus.len());
    for (&mu, traj) in mus.iter().zip(runs) {
        reports.push(difference_report(mu, &traj?, &inviscid)?);
    }
    Ok(PairedRun { inviscid, reports })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Log-log regression of `sqrt(sup_h1_sq)` against `mu`.
pub fn order_fit(reports: &[DifferenceReport]) -> Result<OrderFit> {
    let mut mus: Vec<f64> = reports.iter().map(|r| r.mu).collect();
    mus.sort_by(f64::total_cmp);
    mus.dedup();
    if mus.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 distinct viscosities, got {}",
            mus.len()
        )));
    }
    if let Some(r) = reports.iter().find(|r| !(r.mu > 0.0 && r.sup_h1_sq > 0.0)) {
        return Err(Error::DegenerateReports(format!(
            "report at mu = {} has sup_h1_sq = {}",
            r.mu, r.sup_h1_sq
        )));
    }
    let xs: Vec<f64> = reports.iter().map(|r| r.mu.ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| 0.5 * r.sup_h1_sq.ln()).collect();
    let (order, intercept, r_squared) = least_squares(&xs, &ys)?;
    Ok(OrderFit {
        order,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::initial::{make_initial_data, Generator};

    fn synthetic(mu: f64, sup: f64) -> DifferenceReport {
        DifferenceReport {
            mu,
            sup_h1_sq: sup,
            peak_time: 0.0,
            integrated: IntegratedTerms {
                grad_macro: 0.0,
                gap_h1: 0.0,
                micro_nu: 0.0,
                velocity_micro_nu: 0.0,
            },
            times: vec![],
            h1_sq: vec![],
        }
    }

    #[test]
    fn synthetic_orders() {
        let mus = [0.04, 0.02, 0.01, 0.005];
        let r: Vec<_> = mus.iter().map(|&m| synthetic(m, m * m)).collect();
        let f = order_fit(&r).unwrap();
        assert_abs_diff_eq!(f.order, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let r: Vec<_> = mus.iter().map(|&m| synthetic(m, 4.0 * m.powi(3))).collect();
        assert_abs_diff_eq!(order_fit(&r).unwrap().order, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn order_fit_rejects_bad_input() {
        let r = vec![synthetic(0.1, 1.0), synthetic(0.2, 2.0)];
        assert!(order_fit(&r).is_err());
        let r = vec![
            synthetic(0.1, 1.0),
            synthetic(0.2, 0.0),
            synthetic(0.3, 1.0),
        ];
        assert!(matches!(order_fit(&r), Err(Error::DegenerateReports(_))));
    }

    fn setup() -> (SpatialGrid, HermiteSpec, SystemParams) {
        (
            SpatialGrid::new(1, 16, 2.0 * PI).unwrap(),
            HermiteSpec::one_dim(6).unwrap(),
            SystemParams::new(0.0, 0.5, 2.0).unwrap(),
        )
    }

    #[test]
    fn self_pairing_and_equilibrium_are_zero() {
        let (g, spec, p) = setup();
        let cfg = SimulationConfig::new(0.5, 0.01, 5);
        let x0 = make_initial_data(Generator::PreparedSmooth, g, spec, 0.01, 0).unwrap();
        let traj = Dynamics::new(g, spec, p)
            .unwrap()
            .simulate(&x0, &cfg)
            .unwrap();
        assert!(difference_report(0.0, &traj, &traj).unwrap().is_zero());
        let eq = PerturbationState::zeros(g, spec);
        let run = paired_run(g, spec, p, &eq, &[0.01, 0.02], &cfg).unwrap();
        assert!(run.reports.iter().all(DifferenceReport::is_zero));
    }

    #[test]
    fn reports_are_symmetric_and_nonnegative() {
        let (g, spec, p) = setup();
        let cfg = SimulationConfig::new(0.5, 0.01, 5);
        let x0 = make_initial_data(Generator::RandomBand, g, spec, 0.02, 4).unwrap();
        let a = Dynamics::new(g, spec, p)
            .unwrap()
            .simulate(&x0, &cfg)
            .unwrap();
        let b = Dynamics::new(g, spec, p.with_mu(0.05).unwrap())
            .unwrap()
            .simulate(&x0, &cfg)
            .unwrap();
        let ab = difference_report(0.05, &a, &b).unwrap();
        let ba = difference_report(0.05, &b, &a).unwrap();
        assert_eq!(ab, ba);
        assert!(ab.sup_h1_sq > 0.0);
        let t = ab.integrated;
        assert!(
            t.grad_macro >= 0.0
                && t.gap_h1 >= 0.0
                && t.micro_nu >= 0.0
                && t.velocity_micro_nu >= 0.0
        );
        assert_eq!(ab.h1_sq[0], 0.0);
    }

    #[test]
    fn inviscid_branch_is_the_euler_trajectory() {
        let (g, spec, p) = setup();
        let cfg = SimulationConfig::new(0.3, 0.01, 3);
        let x0 = make_initial_data(Generator::RandomBand, g, spec, 0.02, 9).unwrap();
        let run = paired_run(
            g,
            spec,
            p.with_mu(0.3).unwrap(),
            &x0,
            &[0.01, 0.02, 0.04],
            &cfg,
        )
        .unwrap();
        let euler = Dynamics::new(g, spec, SystemParams::euler(0.5, 2.0).unwrap())
            .unwrap()
            .simulate(&x0, &cfg)
            .unwrap();
        assert_eq!(run.inviscid.snapshots, euler.snapshots);
        let sups: Vec<f64> = run.reports.iter().map(|r| r.sup_h1_sq).collect();
        assert!(sups[0] < sups[1] && sups[1] < sups[2]);
    }
}
