use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `value ~ C (1 + t)^rate`.
    Algebraic,
    /// `value ~ C exp(rate t)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares fit of `log(value)` against `log(1 + t)` or `t` over the
/// samples with `t` in `window` (inclusive).
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    model: DecayModel,
    window: (f64, f64),
) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::Fit("times and values differ in length".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
        }
        xs.push(match model {
            DecayModel::Algebraic => (1.0 + t).ln(),
            DecayModel::Exponential => t,
        });
        ys.push(v.ln());
    }
    if xs.len() < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 samples in the window, got {}",
            xs.len()
        )));
    }
    let (rate, intercept, r_squared) = least_squares(&xs, &ys)?;
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
        samples: xs.len(),
    })
}

/// Ordinary least-squares line `y = slope x + intercept` with its `R^2`.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok((slope, intercept, r_squared))
}
