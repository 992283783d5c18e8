//! Residuals of the fluid-type moment equations satisfied by `(a, b)`:
//!
//! ```text
//! a_t + div b = 0
//! b_i,t + d_i a + sum_j d_j G_ij(g) = rho (u_i - b_i) + rho u_i a
//! d_i b_j + d_j b_i - rho (u_i b_j + u_j b_i) = -G_ij(g)_t + G_ij(l + r + s)
//! ```
//!
//! with `g = {I - P} f`, `G_ij` the second-moment functional and
//! `l = L g - v.grad g`, `r = u . A^dagger g`, `s = rho' (L g + r)`.

use serde::Serialize;

use super::centered_derivative;
use crate::dynamics::{PerturbationState, Tendency};
use crate::error::{Error, Result};
use crate::hermite::{HermiteSpec, Ladder, Stencil};
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResidualReport {
    pub res_a: f64,
    pub res_b: f64,
    pub res_gamma: f64,
}

/// Time derivatives of the moment quantities at one instant.
struct Rates {
    a: Vec<f64>,
    b: Vec<Vec<f64>>,
    /// `gamma[i][j]` for `j >= i`.
    gamma: Vec<Vec<Vec<f64>>>,
}

/// `G_ij` of a coefficient-major field; zero when truncated away.
fn gamma_field(
    spec: HermiteSpec,
    coeffs: &[Vec<f64>],
    i: usize,
    j: usize,
    npts: usize,
) -> Vec<f64> {
    let mut k = [0; 3];
    k[i] += 1;
    k[j] += 1;
    match spec.index(k) {
        Some(idx) => {
            let s = if i == j {
                std::f64::consts::SQRT_2
            } else {
                1.0
            };
            coeffs[idx].iter().map(|v| v * s).collect()
        }
        None => vec![0.0; npts],
    }
}

fn micro_coeffs(state: &PerturbationState) -> Vec<Vec<f64>> {
    state.f.micro().coeffs
}

fn l2(sp: &Spectral, fields: &[Vec<f64>]) -> f64 {
    let cell = sp.grid().cell_volume();
    fields
        .iter()
        .map(|f| f.iter().map(|v| v * v).sum::<f64>() * cell)
        .sum::<f64>()
        .sqrt()
}

fn residuals(sp: &Spectral, state: &PerturbationState, rates: &Rates) -> MomentResidualReport {
    let grid = *sp.grid();
    let dim = grid.space_dim();
    let npts = grid.num_points();
    let spec = state.spec();
    let nb = spec.basis_size();
    let d1 = |v: &[f64], axis: usize| sp.derivative(v, axis, 1).expect("valid axis");
    let rho: Vec<f64> = state.rho.values.iter().map(|r| 1.0 + r).collect();
    let u = &state.u.components;
    let a = state.f.density();
    let b: Vec<&[f64]> = (0..dim).map(|i| state.f.momentum(i)).collect();
    let g = micro_coeffs(state);

    let mut r1 = rates.a.clone();
    for i in 0..dim {
        let db = d1(b[i], i);
        r1.iter_mut().zip(&db).for_each(|(r, d)| *r += d);
    }

    let mut r2 = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut r = rates.b[i].clone();
        let da = d1(a, i);
        r.iter_mut().zip(&da).for_each(|(x, y)| *x += y);
        for j in 0..dim {
            let gij = gamma_field(spec, &g, i, j, npts);
            let dg = d1(&gij, j);
            r.iter_mut().zip(&dg).for_each(|(x, y)| *x += y);
        }
        let ua = sp.product(&u[i], a);
        let inner: Vec<f64> = (0..npts).map(|p| u[i][p] - b[i][p] + ua[p]).collect();
        let src = sp.product(&rho, &inner);
        r.iter_mut().zip(&src).for_each(|(x, y)| *x -= y);
        r2.push(r);
    }

    // l + r + s on the micro part.
    let lg: Vec<Vec<f64>> = g
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let deg = spec.total_degree(k) as f64;
            c.iter().map(|v| -deg * v).collect()
        })
        .collect();
    let mut raised = vec![vec![0.0; npts]; nb];
    for axis in 0..dim {
        let st = Stencil::new(spec, spec, axis, Ladder::Raising);
        for &(s, d, w) in st.terms() {
            let prod = sp.product(&u[axis], &g[s]);
            raised[d]
                .iter_mut()
                .zip(&prod)
                .for_each(|(x, y)| *x += w * y);
        }
    }
    let mut total = vec![vec![0.0; npts]; nb];
    for k in 0..nb {
        let inner: Vec<f64> = (0..npts).map(|p| lg[k][p] + raised[k][p]).collect();
        let s = sp.product(&state.rho.values, &inner);
        for p in 0..npts {
            total[k][p] = inner[p] + s[p];
        }
    }
    for axis in 0..dim {
        let st = Stencil::new(spec, spec, axis, Ladder::VMultiply);
        let mut vg = vec![vec![0.0; npts]; nb];
        for &(s, d, w) in st.terms() {
            vg[d].iter_mut().zip(&g[s]).for_each(|(x, y)| *x += w * y);
        }
        for k in 0..nb {
            let dv = d1(&vg[k], axis);
            total[k].iter_mut().zip(&dv).for_each(|(x, y)| *x -= y);
        }
    }

    let mut r3 = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let dbij = d1(b[j], i);
            let dbji = d1(b[i], j);
            let uibj = sp.product(&u[i], b[j]);
            let ujbi = sp.product(&u[j], b[i]);
            let sum: Vec<f64> = (0..npts).map(|p| uibj[p] + ujbi[p]).collect();
            let fric = sp.product(&rho, &sum);
            let gam = gamma_field(spec, &total, i, j, npts);
            let r: Vec<f64> = (0..npts)
                .map(|p| dbij[p] + dbji[p] - fric[p] + rates.gamma[i][j - i][p] - gam[p])
                .collect();
            r3.push(r);
        }
    }

    MomentResidualReport {
        res_a: l2(sp, &[r1]),
        res_b: l2(sp, &r2),
        res_gamma: l2(sp, &r3),
    }
}

fn gamma_all(
    spec: HermiteSpec,
    coeffs: &[Vec<f64>],
    dim: usize,
    npts: usize,
) -> Vec<Vec<Vec<f64>>> {
    (0..dim)
        .map(|i| {
            (i..dim)
                .map(|j| gamma_field(spec, coeffs, i, j, npts))
                .collect()
        })
        .collect()
}

/// Residuals with time derivatives from centered differences on the sampled
/// window; the maximum over interior samples is returned.
pub fn moment_residuals(
    sp: &Spectral,
    window: &[PerturbationState],
    times: &[f64],
) -> Result<MomentResidualReport> {
    if window.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: window.len(),
        });
    }
    if times.len() != window.len() {
        return Err(Error::Shape("times and snapshots differ in length".into()));
    }
    let grid = *sp.grid();
    let dim = grid.space_dim();
    let npts = grid.num_points();
    let spec = window[0].spec();
    let deriv = |j: usize, pick: &dyn Fn(&PerturbationState) -> Vec<f64>| -> Vec<f64> {
        let (ym, y0, yp) = (pick(&window[j - 1]), pick(&window[j]), pick(&window[j + 1]));
        (0..npts)
            .map(|p| centered_derivative(&times[j - 1..=j + 1], &[ym[p], y0[p], yp[p]], 1))
            .collect()
    };
    let mut worst = MomentResidualReport {
        res_a: 0.0,
        res_b: 0.0,
        res_gamma: 0.0,
    };
    for j in 1..window.len() - 1 {
        let a = deriv(j, &|s| s.f.density().to_vec());
        let b = (0..dim)
            .map(|i| deriv(j, &|s| s.f.momentum(i).to_vec()))
            .collect();
        let gamma = (0..dim)
            .map(|i| {
                (i..dim)
                    .map(|k| deriv(j, &|s| gamma_field(spec, &micro_coeffs(s), i, k, npts)))
                    .collect()
            })
            .collect();
        let r = residuals(sp, &window[j], &Rates { a, b, gamma });
        worst.res_a = worst.res_a.max(r.res_a);
        worst.res_b = worst.res_b.max(r.res_b);
        worst.res_gamma = worst.res_gamma.max(r.res_gamma);
    }
    Ok(worst)
}

/// Residuals with exact time derivatives taken from a right-hand side.
pub fn moment_residuals_instantaneous(
    sp: &Spectral,
    state: &PerturbationState,
    tendency: &Tendency,
) -> MomentResidualReport {
    let grid = *sp.grid();
    let dim = grid.space_dim();
    let spec = state.spec();
    let mut micro_rate = tendency.f.clone();
    micro_rate[0].iter_mut().for_each(|v| *v = 0.0);
    for axis in 0..dim {
        micro_rate[spec.unit(axis)]
            .iter_mut()
            .for_each(|v| *v = 0.0);
    }
    let rates = Rates {
        a: tendency.f[0].clone(),
        b: (0..dim).map(|i| tendency.f[spec.unit(i)].clone()).collect(),
        gamma: gamma_all(spec, &micro_rate, dim, grid.num_points()),
    };
    residuals(sp, state, &rates)
}
