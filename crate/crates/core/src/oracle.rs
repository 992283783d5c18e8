//! Independent brute-force oracles: Gauss-Hermite quadrature for the
//! velocity operators, high-order finite differences for spectral
//! derivatives, and oversampled products for dealiasing.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::hermite::quadrature::{OracleOp, QuadratureOracle, ORACLE_MAX_CAP};
use crate::hermite::{coercivity_constants, HermiteSpec, VelocityCoeffs};
use crate::spectral::{high_frequency_constant, SpatialGrid, Spectral};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleCheck {
    fn new(name: impl Into<String>, error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            error,
            tolerance,
            passed: error.is_finite() && error <= tolerance,
        }
    }
}

fn random_coeffs(spec: HermiteSpec, rng: &mut impl Rng) -> VelocityCoeffs {
    let v = (0..spec.basis_size())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    VelocityCoeffs::new(spec, v).expect("finite")
}

fn max_diff(a: &VelocityCoeffs, b: &VelocityCoeffs) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest discrepancy between every ladder-based operator and its quadrature
/// evaluation on `samples` random profiles.
pub fn hermite_operator_error(spec: HermiteSpec, samples: usize, seed: u64) -> Result<f64> {
    let o = QuadratureOracle::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let coeffs = |c: &VelocityCoeffs, op| {
        o.apply(c, op)
            .map(|r| r.coeffs().expect("coefficient output"))
    };
    let value = |c: &VelocityCoeffs, op| o.apply(c, op).map(|r| r.value().expect("scalar output"));
    for _ in 0..samples {
        let c = random_coeffs(spec, &mut rng);
        worst = worst.max(max_diff(
            &coeffs(&c, OracleOp::FokkerPlanck)?,
            &c.fokker_planck(),
        ));
        for a in 0..spec.velocity_dim() {
            worst = worst.max(max_diff(
                &coeffs(&c, OracleOp::VMultiply(a))?,
                &c.v_multiply(a),
            ));
            worst = worst.max(max_diff(&coeffs(&c, OracleOp::GradV(a))?, &c.grad_v(a)));
            for b in 0..spec.velocity_dim() {
                worst = worst.max((value(&c, OracleOp::Gamma(a, b))? - c.gamma_moment(a, b)).abs());
            }
        }
        let nu = c.nu_norm_sq();
        worst = worst.max((value(&c, OracleOp::NuForm)? - nu).abs() / nu.max(1.0));
    }
    Ok(worst)
}

/// Periodic eighth-order central difference of order 1 or 2.
pub fn fd8_derivative(values: &[f64], dx: f64, order: usize) -> Vec<f64> {
    let n = values.len() as isize;
    let at = |i: isize| values[i.rem_euclid(n) as usize];
    let (center, w): (f64, [f64; 4]) = match order {
        1 => (0.0, [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0]),
        2 => (
            -205.0 / 72.0,
            [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
        ),
        _ => panic!("finite-difference order must be 1 or 2"),
    };
    let sign = if order == 1 { -1.0 } else { 1.0 };
    (0..n)
        .map(|i| {
            let mut s = center * at(i);
            for (k, wk) in w.iter().enumerate() {
                let m = k as isize + 1;
                s += wk * (at(i + m) + sign * at(i - m));
            }
            s / dx.powi(order as i32)
        })
        .collect()
}

/// Spectral second derivative of `sin(2 pi x / L) cos(4 pi x / L)` against
/// eighth-order finite differences on 512 points.
pub fn spectral_derivative_error() -> Result<f64> {
    let l = 2.0 * PI;
    let grid = SpatialGrid::new(1, 512, l)?;
    let sp = Spectral::new(grid);
    let v = grid.sample(|x| (2.0 * PI * x[0] / l).sin() * (4.0 * PI * x[0] / l).cos());
    let spectral = sp.derivative(&v, 0, 2)?;
    let fd = fd8_derivative(&v, grid.dx(), 2);
    Ok(spectral
        .iter()
        .zip(&fd)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Product of band-limited fields evaluated on the doubled grid, where it is
/// alias-free, then projected back to the kept band of `grid`.
pub fn oversampled_product(grid: SpatialGrid, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = grid.points_per_axis();
    let fine = SpatialGrid::new(grid.space_dim(), 2 * n, grid.domain_length())?;
    let coarse_sp = Spectral::new(grid);
    let fine_sp = Spectral::new(fine);
    let dims = grid.space_dim();
    let to_fine = |p: usize| -> usize {
        let idx = grid.axis_indices(p);
        let mut q = 0;
        for axis in (0..dims).rev() {
            let s = grid.signed_index(idx[axis]);
            q = q * 2 * n + s.rem_euclid(2 * n as i64) as usize;
        }
        q
    };
    let scale = (2f64).powi(dims as i32);
    let lift = |v: &[f64]| {
        let hat = coarse_sp.forward(v);
        let mut fine_hat = vec![num_complex::Complex64::new(0.0, 0.0); fine.num_points()];
        for (p, h) in hat.iter().enumerate() {
            if coarse_sp.kept(p) {
                fine_hat[to_fine(p)] = h * scale;
            }
        }
        fine_sp.inverse(fine_hat)
    };
    let (fa, fb) = (lift(a), lift(b));
    let prod: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    let prod_hat = fine_sp.forward(&prod);
    let mut hat = vec![num_complex::Complex64::new(0.0, 0.0); grid.num_points()];
    for (p, h) in hat.iter_mut().enumerate() {
        if coarse_sp.kept(p) {
            *h = prod_hat[to_fine(p)] / scale;
        }
    }
    Ok(coarse_sp.inverse(hat))
}

/// Dealiased product against the oversampling oracle on random band-limited
/// fields.
pub fn dealias_error(dim: usize, n: usize, seed: u64) -> Result<f64> {
    let grid = SpatialGrid::new(dim, n, 2.0 * PI)?;
    let sp = Spectral::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = || {
        let raw: Vec<f64> = (0..grid.num_points())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        sp.dealias(&raw)
    };
    let (a, b) = (field(), field());
    let fast = sp.product(&a, &b);
    let slow = oversampled_product(grid, &a, &b)?;
    Ok(fast
        .iter()
        .zip(&slow)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Worst violation of `|high|_{L^2} <= (C / r0) |grad g|_{L^2}` over random
/// fields; nonpositive when the bound holds.
pub fn split_bound_excess(seed: u64) -> Result<f64> {
    let grid = SpatialGrid::new(1, 128, 2.0 * PI)?;
    let sp = Spectral::new(grid);
    let c = high_frequency_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for r0 in [0.5, 1.0, 2.0, 4.0] {
        let raw: Vec<f64> = (0..grid.num_points())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let (_, high) = sp.freq_split(&raw, r0)?;
        let high_norm = sp.sobolev_norm_sq(&high, 0).sqrt();
        let grad = sp.gradient_power_norm_sq(&raw, 1).sqrt();
        worst = worst.max(high_norm - (1.0 + 1e-12) * c / r0 * grad);
    }
    Ok(worst)
}

/// Run every oracle comparison used to validate the discretization.
pub fn run_oracle_suite() -> Result<Vec<OracleCheck>> {
    let mut checks = Vec::new();
    let mut one = 0.0f64;
    for cap in 2..=ORACLE_MAX_CAP {
        one = one.max(hermite_operator_error(
            HermiteSpec::one_dim(cap)?,
            3,
            cap as u64,
        )?);
    }
    checks.push(OracleCheck::new(
        "hermite operators vs quadrature in 1D at caps 2..=16",
        one,
        1e-10,
    ));
    let mut three = 0.0f64;
    for cap in [2, 5, 8, 16] {
        three = three.max(hermite_operator_error(
            HermiteSpec::three_dim(cap)?,
            2,
            100 + cap as u64,
        )?);
    }
    checks.push(OracleCheck::new(
        "hermite operators vs quadrature in 3D at caps 2/5/8/16",
        three,
        1e-10,
    ));

    let lams: Vec<f64> = [4, 8, 16]
        .iter()
        .map(|&n| HermiteSpec::one_dim(n).map(|s| coercivity_constants(s).min()))
        .collect::<Result<_>>()?;
    let lo = lams.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lams.iter().copied().fold(0.0, f64::max);
    checks.push(OracleCheck::new(
        "coercivity constant spread across caps 4/8/16",
        (hi - lo) / hi,
        0.2,
    ));
    checks.push(OracleCheck::new(
        "coercivity constant positivity margin",
        -lo,
        0.0,
    ));

    checks.push(OracleCheck::new(
        "spectral d2 vs 8th-order finite differences at n = 512",
        spectral_derivative_error()?,
        1e-8,
    ));
    checks.push(OracleCheck::new(
        "dealiased product vs 2n oversampling in 1D at n = 64",
        dealias_error(1, 64, 1)?,
        1e-12,
    ));
    checks.push(OracleCheck::new(
        "dealiased product vs 2n oversampling in 3D at n = 16",
        dealias_error(3, 16, 2)?,
        1e-12,
    ));
    checks.push(OracleCheck::new(
        "high-frequency split bound excess",
        split_bound_excess(3)?,
        0.0,
    ));
    Ok(checks)
}
