use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{canonical_modes, evolve_modes, ModeNorms};
use crate::diagnostics::{fit_decay, DecayFit, DecayModel};
use crate::dynamics::SystemParams;
use crate::error::{Error, Result};
use crate::hermite::HermiteSpec;
use crate::spectral::cutoff_profile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProfileKind {
    /// Emulates `L^q` data: `w = |xi|^(-3 (1 - 1/q))` under a plateau envelope.
    Lq { q: f64 },
    /// Smooth bump of half-width `width` around `center`.
    Concentrated { center: f64, width: f64 },
}

/// Radial Fourier amplitude of the initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumProfile {
    pub kind: ProfileKind,
    /// Radius beyond which the weight vanishes.
    pub cap: f64,
}

impl SpectrumProfile {
    pub const DEFAULT_CAP: f64 = 8.0;

    pub fn lq(q: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in [1, 2], got {q}"
            )));
        }
        Ok(Self {
            kind: ProfileKind::Lq { q },
            cap: Self::DEFAULT_CAP,
        })
    }

    pub fn l1() -> Self {
        Self {
            kind: ProfileKind::Lq { q: 1.0 },
            cap: Self::DEFAULT_CAP,
        }
    }

    pub fn concentrated(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && center > width) {
            return Err(Error::InvalidParameter(format!(
                "bump needs 0 < width < center, got center {center}, width {width}"
            )));
        }
        Ok(Self {
            kind: ProfileKind::Concentrated { center, width },
            cap: center + width,
        })
    }

    pub fn q_class(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::Lq { q } => Some(q),
            ProfileKind::Concentrated { .. } => None,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            ProfileKind::Lq { .. } => (0.0, self.cap),
            ProfileKind::Concentrated { center, width } => (center - width, center + width),
        }
    }

    /// Constant on `[0, 1]`, smooth descent to zero at the cap.
    fn envelope(&self, r: f64) -> f64 {
        if r <= 1.0 {
            1.0
        } else {
            cutoff_profile(0.5 + 0.5 * (r - 1.0) / (self.cap - 1.0))
        }
    }

    pub fn weight(&self, r: f64) -> f64 {
        match self.kind {
            ProfileKind::Lq { q } => {
                if r <= 0.0 {
                    return if q == 1.0 { 1.0 } else { 0.0 };
                }
                r.powf(-3.0 * (1.0 - 1.0 / q)) * self.envelope(r)
            }
            ProfileKind::Concentrated { center, width } => {
                let z = (r - center) / width;
                if z.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - z * z)).exp()
                }
            }
        }
    }
}

/// Whole-space norms of the evolved canonical data, one entry per time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupSeries {
    pub deriv_order: usize,
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub f: Vec<f64>,
    pub micro: Vec<f64>,
    pub gap: Vec<f64>,
}

const COMPONENTS: usize = 6;

fn components(n: &ModeNorms) -> [f64; COMPONENTS] {
    [n.total(), n.rho, n.u, n.f, n.micro, n.gap]
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: Vec<f64>,
}

fn kronrod<F>(f: &F, a: f64, b: f64) -> Panel
where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let nodes: Vec<(f64, f64, f64)> = (0..15)
        .map(|i| {
            let (j, sign) = if i < 8 { (i, -1.0) } else { (14 - i, 1.0) };
            let g = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
            (c + sign * h * XGK[j], WGK[j], g)
        })
        .collect();
    let values: Vec<Vec<f64>> = nodes.par_iter().map(|&(x, _, _)| f(x)).collect();
    let n = values[0].len();
    let mut k = vec![0.0; n];
    let mut g = vec![0.0; n];
    for ((_, wk, wg), v) in nodes.iter().zip(&values) {
        for i in 0..n {
            k[i] += wk * v[i];
            g[i] += wg * v[i];
        }
    }
    let value: Vec<f64> = k.iter().map(|v| v * h).collect();
    let error = k.iter().zip(&g).map(|(k, g)| ((k - g) * h).abs()).collect();
    Panel { a, b, value, error }
}

/// Adaptive Gauss-Kronrod quadrature of a vector integrand over the given
/// initial breakpoints, refined until every component meets `rtol`.
pub(crate) fn adaptive_quadrature<F>(
    f: F,
    breakpoints: &[f64],
    rtol: f64,
    max_panels: usize,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .map(|w| kronrod(&f, w[0], w[1]))
        .collect();
    loop {
        let n = panels[0].value.len();
        let mut total = vec![0.0; n];
        let mut err = vec![0.0; n];
        for p in &panels {
            for i in 0..n {
                total[i] += p.value[i];
                err[i] += p.error[i];
            }
        }
        if total.iter().chain(&err).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadrature integrand".into()));
        }
        let ratio = |e: f64, t: f64| {
            if e == 0.0 {
                0.0
            } else {
                e / t.abs().max(f64::MIN_POSITIVE)
            }
        };
        let worst = (0..n).map(|i| ratio(err[i], total[i])).fold(0.0, f64::max);
        if worst <= rtol {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureNonConvergence(worst));
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let s = (0..n)
                    .map(|i| ratio(p.error[i], total[i]))
                    .fold(0.0, f64::max);
                (j, s)
            })
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let p = panels.swap_remove(idx);
        let mid = 0.5 * (p.a + p.b);
        panels.push(kronrod(&f, p.a, mid));
        panels.push(kronrod(&f, mid, p.b));
    }
}

/// Breakpoints refined geometrically toward the origin.
fn breakpoints(lo: f64, hi: f64) -> Vec<f64> {
    if lo > 0.0 {
        return (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
    }
    let mut pts = vec![0.0];
    pts.extend((0..=14).rev().map(|j| hi * 0.5f64.powi(j)));
    pts
}

/// `|| grad^k U(t) ||^2` over three-dimensional space by radial quadrature of
/// the per-mode energies of the canonical mode set, weighted by `profile`.
/// Returned series hold norms (square roots).
pub fn semigroup_decay(
    spec: HermiteSpec,
    params: &SystemParams,
    profile: &SpectrumProfile,
    deriv_order: usize,
    times: &[f64],
    rtol: f64,
) -> Result<SemigroupSeries> {
    if deriv_order > 1 {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be 0 or 1, got {deriv_order}"
        )));
    }
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("times must be nonnegative".into()));
    }
    let nt = times.len();
    let integrand = |r: f64| -> Vec<f64> {
        let mut out = vec![0.0; COMPONENTS * nt];
        let w = profile.weight(r);
        if w == 0.0 || r == 0.0 {
            return out;
        }
        let measure = 4.0 * PI * r * r * w * w * r.powi(2 * deriv_order as i32);
        let modes = canonical_modes(spec, r);
        let count = modes.len() as f64;
        for (j, evolved) in evolve_modes(&modes, params, times).iter().enumerate() {
            for m in evolved {
                for (c, v) in components(&m.norms()).iter().enumerate() {
                    out[c * nt + j] += measure * v / count;
                }
            }
        }
        out
    };
    let (lo, hi) = profile.support();
    let sums = adaptive_quadrature(integrand, &breakpoints(lo, hi), rtol, 20_000)?;
    let series = |c: usize| {
        sums[c * nt..(c + 1) * nt]
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    };
    Ok(SemigroupSeries {
        deriv_order,
        times: times.to_vec(),
        total: series(0),
        rho: series(1),
        u: series(2),
        f: series(3),
        micro: series(4),
        gap: series(5),
    })
}

/// Algebraic norm-decay rates of the whole-space linear flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroGapRates {
    pub total: DecayFit,
    pub f: DecayFit,
    pub micro: DecayFit,
    pub u: DecayFit,
    pub gap: DecayFit,
}

impl MicroGapRates {
    /// How much faster the microscopic part decays than `f`.
    pub fn micro_excess(&self) -> f64 {
        self.f.rate - self.micro.rate
    }

    /// How much faster `b - u` decays than `u`.
    pub fn gap_excess(&self) -> f64 {
        self.u.rate - self.gap.rate
    }
}

pub fn micro_gap_decay(
    spec: HermiteSpec,
    params: &SystemParams,
    profile: &SpectrumProfile,
    times: &[f64],
    rtol: f64,
) -> Result<MicroGapRates> {
    let s = semigroup_decay(spec, params, profile, 0, times, rtol)?;
    let fit = |v: &[f64]| {
        fit_decay(
            times,
            v,
            DecayModel::Algebraic,
            (f64::NEG_INFINITY, f64::INFINITY),
        )
    };
    Ok(MicroGapRates {
        total: fit(&s.total)?,
        f: fit(&s.f)?,
        micro: fit(&s.micro)?,
        u: fit(&s.u)?,
        gap: fit(&s.gap)?,
    })
}
