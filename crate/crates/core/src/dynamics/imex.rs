//! ARS(2,3,2) implicit-explicit Runge-Kutta stepping and trajectory driver.
//!
//! The implicit part is the constant-coefficient operator of
//! [`Dynamics::implicit_apply`]; everything else (transport, advection,
//! pressure, density-weighted relaxation) is explicit. The explicit tableau
//! has stability polynomial `1 + z + z^2/2 + z^3/6`, which contains a
//! segment of the imaginary axis, so spectral transport is stable under the
//! CFL condition.

use log::warn;

use super::{Dynamics, PerturbationState};
use crate::diagnostics::{energy_report, EnergyReport};
use crate::error::{Error, Result};

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
const DELTA: f64 = -2.0 * std::f64::consts::SQRT_2 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub dt: f64,
    /// Record a sample every this many steps (the final step is always kept).
    pub sample_every: usize,
    /// Sobolev order used in the energy reports.
    pub energy_order: usize,
    pub keep_snapshots: bool,
}

impl SimulationConfig {
    pub fn new(t_end: f64, dt: f64, sample_every: usize) -> Self {
        Self {
            t_end,
            dt,
            sample_every,
            energy_order: 3,
            keep_snapshots: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            problems.push(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            problems.push(format!("dt must be positive, got {}", self.dt));
        }
        if self.sample_every == 0 {
            problems.push("sample_every must be at least 1".into());
        }
        if self.energy_order > 3 {
            problems.push(format!(
                "energy order must be at most 3, got {}",
                self.energy_order
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Sampled trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Empty unless snapshots were requested.
    pub snapshots: Vec<PerturbationState>,
    pub reports: Vec<EnergyReport>,
}

impl Dynamics {
    /// One ARS(2,3,2) step.
    pub fn step(&self, y: &PerturbationState, dt: f64) -> Result<PerturbationState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let hg = dt * GAMMA;
        let e1 = self.rhs(y)?.minus(&self.implicit_apply(y));
        let y2 = self.implicit_solve(&y.combine(&[(hg, &e1)]), hg);
        let r2 = self.rhs(&y2)?;
        let k2 = self.implicit_apply(&y2);
        let e2 = r2.minus(&k2);
        let y3 = self.implicit_solve(
            &y.combine(&[
                (dt * DELTA, &e1),
                (dt * (1.0 - DELTA), &e2),
                (dt * (1.0 - GAMMA), &k2),
            ]),
            hg,
        );
        let r3 = self.rhs(&y3)?;
        let next = y.combine(&[(dt * (1.0 - GAMMA), &r2), (dt * GAMMA, &r3)]);
        next.check_finite()?;
        next.check_vacuum()?;
        Ok(next)
    }

    /// Integrate from `initial` and sample diagnostics.
    pub fn simulate(
        &self,
        initial: &PerturbationState,
        cfg: &SimulationConfig,
    ) -> Result<Trajectory> {
        cfg.validate()?;
        initial.check_finite()?;
        initial.check_vacuum()?;
        let steps = cfg.steps();
        let mut traj = Trajectory {
            times: Vec::new(),
            snapshots: Vec::new(),
            reports: Vec::new(),
        };
        let mut state = initial.clone();
        let mut warned = false;
        for n in 0..=steps {
            if n % cfg.sample_every == 0 || n == steps {
                let t = n as f64 * cfg.dt;
                traj.times.push(t);
                traj.reports
                    .push(energy_report(self.spectral(), &state, cfg.energy_order, t));
                if cfg.keep_snapshots {
                    traj.snapshots.push(state.clone());
                }
            }
            if n == steps {
                break;
            }
            if !warned && cfg.dt > self.cfl_limit(&state) {
                warn!(
                    "dt = {} exceeds the transport CFL bound {:.3e}",
                    cfg.dt,
                    self.cfl_limit(&state)
                );
                warned = true;
            }
            state = self.step(&state, cfg.dt)?;
        }
        Ok(traj)
    }
}
