//! Spectral solvers and decay analysis for the perturbative compressible
//! Navier-Stokes / Euler - Vlasov-Fokker-Planck system with density-dependent
//! friction.
//!
//! The unknowns are the fluid density perturbation `rho`, the fluid velocity
//! `u`, and the particle distribution perturbation `f = (F - M)/sqrt(M)`.
//! Velocity space is discretized with Maxwellian-weighted Hermite functions,
//! physical space with a periodic Fourier pseudospectral grid.
//!
//! Module map:
//!
//! * [`hermite`]: velocity-space basis and the exact operators acting on it
//!   (Fokker-Planck, `v`, `grad_v`, projections, moments, weighted norm).
//! * [`spectral`]: periodic grids, fields, derivatives, dealiasing, Sobolev
//!   norms and the smooth low/high frequency split.
//! * [`dynamics`]: nonlinear right-hand side, pressure law and the IMEX
//!   integrator.
//! * [`diagnostics`]: energy / dissipation functionals, conservation
//!   integrals, moment-system residuals, Lyapunov monitor and decay fits.
//! * [`linear`]: exact per-wavenumber analysis of the linearized system and
//!   whole-space semigroup decay by radial quadrature.
//! * [`inviscid`]: paired viscous / inviscid runs and the convergence order
//!   in the viscosity.
//! * [`initial`]: initial-data generators.
//! * [`oracle`]: independent brute-force oracles (quadrature, finite
//!   differences, oversampling) used by the tests and the CLI.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod hermite;
pub mod initial;
pub mod inviscid;
pub mod linear;
pub mod oracle;
pub mod scalar;
pub mod spectral;

pub use diagnostics::{EnergyReport, MomentResidualReport};
pub use dynamics::{Dynamics, PerturbationState, SystemParams, Tendency};
pub use error::{Error, Result};
pub use hermite::{HermiteSpec, MomentPair, VelocityCoeffs};
pub use inviscid::DifferenceReport;
pub use linear::{ModeState, SpectrumProfile};
pub use scalar::Scalar;
pub use spectral::{KineticField, ScalarField, SpatialGrid, Spectral, VectorField};
