use std::f64::consts::PI;

use num_complex::Complex64;

use kinfluid_core::diagnostics::{fit_decay, DecayModel};
use kinfluid_core::dynamics::SimulationConfig;
use kinfluid_core::initial::{make_initial_data, Generator};
use kinfluid_core::linear::{evolve_mode, Method};
use kinfluid_core::{
    Dynamics, HermiteSpec, ModeState, PerturbationState, SpatialGrid, SystemParams, VelocityCoeffs,
};

fn setup() -> (Dynamics, PerturbationState) {
    let grid = SpatialGrid::new(1, 32, 2.0 * PI).unwrap();
    let spec = HermiteSpec::one_dim(10).unwrap();
    let dy = Dynamics::new(grid, spec, SystemParams::new(0.05, 0.5, 2.0).unwrap()).unwrap();
    let x0 = make_initial_data(Generator::PreparedSmooth, grid, spec, 1e-8, 4).unwrap();
    (dy, x0)
}

fn mode(dy: &Dynamics, s: &PerturbationState, j: usize) -> ModeState {
    let sp = dy.spectral();
    let n = dy.grid().num_points() as f64;
    let hat = |v: &[f64]| sp.forward(v)[j] / n;
    let f: Vec<Complex64> = s.f.coeffs.iter().map(|c| hat(c)).collect();
    ModeState::new(
        sp.wavenumber_norm(j),
        hat(&s.rho.values),
        s.u.components.iter().map(|c| hat(c)).collect(),
        VelocityCoeffs::new(s.spec(), f).unwrap(),
    )
    .unwrap()
}

#[test]
fn single_step_matches_linear_propagator_to_third_order() {
    let (dy, x0) = setup();
    let p = dy.params();
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dt| {
            let y = dy.step(&x0, dt).unwrap();
            (1..=3)
                .map(|j| {
                    let exact = evolve_mode(&mode(&dy, &x0, j), &p, dt, Method::Expm).unwrap();
                    (mode(&dy, &y, j).to_vector() - exact.to_vector()).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((6.0..=10.0).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn simulated_energy_decays_exponentially() {
    let (dy, _) = setup();
    let x0 = make_initial_data(Generator::RandomBand, dy.grid(), dy.spec(), 1e-3, 9).unwrap();
    let traj = dy
        .simulate(&x0, &SimulationConfig::new(20.0, 0.01, 20))
        .unwrap();
    let energy: Vec<f64> = traj.reports.iter().map(|r| r.energy).collect();
    let fit = fit_decay(&traj.times, &energy, DecayModel::Exponential, (5.0, 20.0)).unwrap();
    assert!(fit.rate < -0.1 && fit.r_squared > 0.95, "{fit:?}");
    assert!(energy[energy.len() - 1] < 1e-3 * energy[0]);
    for r in &traj.reports {
        assert!(r.mass_fluid.abs() < 1e-12 && r.mass_particles.abs() < 1e-12);
    }
}
