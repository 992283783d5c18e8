//! Maxwellian-weighted Hermite representation of velocity profiles.
//!
//! Basis: `phi_k(v) = He_k(v) sqrt(M(v)) / sqrt(k!)` per axis, tensorized over
//! the velocity axes. The basis is orthonormal in `L^2(dv)`, the linearized
//! Fokker-Planck operator is diagonal (`-|k|_1`), and multiplication by `v`
//! and differentiation in `v` are three-term ladder stencils. Degrees above
//! the cap are dropped after every operator application.

pub mod quadrature;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest per-axis degree accepted for the primary axis.
pub const MAX_DEGREE_CAP: usize = 64;

/// Truncation of the velocity basis.
///
/// For `velocity_dim = 3` the primary axis (axis 0) keeps degrees up to
/// `degree_cap` and the two transverse axes keep degrees up to
/// `transverse_cap`. This subspace is invariant under the linearized
/// dynamics for wavevectors along axis 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HermiteSpec {
    degree_cap: usize,
    velocity_dim: usize,
    transverse_cap: usize,
}

impl HermiteSpec {
    pub fn new(degree_cap: usize, velocity_dim: usize, transverse_cap: usize) -> Result<Self> {
        if degree_cap < 2 {
            return Err(Error::InvalidSpec(format!(
                "degree_cap must be at least 2, got {degree_cap}"
            )));
        }
        if degree_cap > MAX_DEGREE_CAP {
            return Err(Error::InvalidSpec(format!(
                "degree_cap must be at most {MAX_DEGREE_CAP}, got {degree_cap}"
            )));
        }
        match velocity_dim {
            1 => Ok(Self {
                degree_cap,
                velocity_dim,
                transverse_cap: 0,
            }),
            3 => {
                if transverse_cap != 1 {
                    return Err(Error::InvalidSpec(format!(
                        "transverse_cap must be 1 when velocity_dim = 3 (the transverse \
                         velocity moments live on degree-1 indices), got {transverse_cap}"
                    )));
                }
                Ok(Self {
                    degree_cap,
                    velocity_dim,
                    transverse_cap,
                })
            }
            other => Err(Error::InvalidSpec(format!(
                "velocity_dim must be 1 or 3, got {other}"
            ))),
        }
    }

    pub fn one_dim(degree_cap: usize) -> Result<Self> {
        Self::new(degree_cap, 1, 0)
    }

    pub fn three_dim(degree_cap: usize) -> Result<Self> {
        Self::new(degree_cap, 3, 1)
    }

    /// Same layout with every retained axis widened by `extra` degrees.
    /// Used internally to evaluate quadratic forms without truncation.
    pub fn with_headroom(&self, extra: usize) -> Self {
        Self {
            degree_cap: self.degree_cap + extra,
            velocity_dim: self.velocity_dim,
            transverse_cap: if self.velocity_dim == 3 {
                self.transverse_cap + extra
            } else {
                0
            },
        }
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn velocity_dim(&self) -> usize {
        self.velocity_dim
    }

    pub fn transverse_cap(&self) -> usize {
        self.transverse_cap
    }

    /// Per-axis caps; unused axes have cap 0.
    pub fn caps(&self) -> [usize; 3] {
        if self.velocity_dim == 3 {
            [self.degree_cap, self.transverse_cap, self.transverse_cap]
        } else {
            [self.degree_cap, 0, 0]
        }
    }

    pub fn basis_size(&self) -> usize {
        let c = self.caps();
        (c[0] + 1) * (c[1] + 1) * (c[2] + 1)
    }

    /// Flat index of multi-index `k`, or `None` if `k` is truncated away.
    pub fn index(&self, k: [usize; 3]) -> Option<usize> {
        let c = self.caps();
        if k[0] > c[0] || k[1] > c[1] || k[2] > c[2] {
            return None;
        }
        Some(k[0] + (c[0] + 1) * (k[1] + (c[1] + 1) * k[2]))
    }

    pub fn multi_index(&self, i: usize) -> [usize; 3] {
        let c = self.caps();
        let n0 = c[0] + 1;
        let n1 = c[1] + 1;
        [i % n0, (i / n0) % n1, i / (n0 * n1)]
    }

    pub fn total_degree(&self, i: usize) -> usize {
        self.multi_index(i).iter().sum()
    }

    /// Index of the degree-one function on `axis` (carries `b_axis`).
    pub fn unit(&self, axis: usize) -> usize {
        let mut k = [0; 3];
        k[axis] = 1;
        self.index(k)
            .expect("degree-one indices are always retained")
    }

    /// All multi-indices in flat order.
    pub fn multi_indices(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        (0..self.basis_size()).map(move |i| self.multi_index(i))
    }
}

/// Which ladder combination a stencil realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    /// Multiplication by `v_axis`.
    VMultiply,
    /// Derivative in `v_axis`.
    GradV,
    /// `A^dagger_axis = -d/dv_axis + v_axis / 2`.
    Raising,
}

/// Sparse realization of a ladder operator from one truncation to another.
#[derive(Debug, Clone)]
pub struct Stencil {
    src: HermiteSpec,
    dst: HermiteSpec,
    terms: Vec<(usize, usize, f64)>,
}

impl Stencil {
    pub fn new(src: HermiteSpec, dst: HermiteSpec, axis: usize, kind: Ladder) -> Self {
        assert!(axis < src.velocity_dim, "axis {axis} out of range");
        let mut terms = Vec::with_capacity(2 * src.basis_size());
        for s in 0..src.basis_size() {
            let k = src.multi_index(s);
            let up = ((k[axis] + 1) as f64).sqrt();
            let down = (k[axis] as f64).sqrt();
            let mut above = k;
            above[axis] += 1;
            let w_up = match kind {
                Ladder::VMultiply | Ladder::Raising => up,
                Ladder::GradV => -up / 2.0,
            };
            if let Some(d) = dst.index(above) {
                terms.push((s, d, w_up));
            }
            if k[axis] > 0 && kind != Ladder::Raising {
                let mut below = k;
                below[axis] -= 1;
                let w_down = match kind {
                    Ladder::VMultiply => down,
                    _ => down / 2.0,
                };
                if let Some(d) = dst.index(below) {
                    terms.push((s, d, w_down));
                }
            }
        }
        Self { src, dst, terms }
    }

    pub fn src(&self) -> HermiteSpec {
        self.src
    }

    pub fn dst(&self) -> HermiteSpec {
        self.dst
    }

    /// `(source index, destination index, weight)` triples.
    pub fn terms(&self) -> &[(usize, usize, f64)] {
        &self.terms
    }

    /// `out += scale * S input`.
    pub fn apply_add<T: Scalar>(&self, input: &[T], out: &mut [T], scale: f64) {
        debug_assert_eq!(input.len(), self.src.basis_size());
        debug_assert_eq!(out.len(), self.dst.basis_size());
        for &(s, d, w) in &self.terms {
            out[d] += input[s] * (w * scale);
        }
    }
}

/// Density and momentum moments of a velocity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPair<T = f64> {
    pub a: T,
    pub b: Vec<T>,
}

/// Output of [`VelocityCoeffs::project_macro`].
#[derive(Debug, Clone, PartialEq)]
pub struct MacroMicro<T = f64> {
    pub macro_part: VelocityCoeffs<T>,
    pub micro: VelocityCoeffs<T>,
    pub moments: MomentPair<T>,
}

/// Hermite coefficients of one velocity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityCoeffs<T = f64> {
    spec: HermiteSpec,
    coeffs: Vec<T>,
}

impl<T: Scalar> VelocityCoeffs<T> {
    pub fn new(spec: HermiteSpec, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != spec.basis_size() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                spec.basis_size(),
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("velocity coefficients".into()));
        }
        Ok(Self { spec, coeffs })
    }

    pub fn zeros(spec: HermiteSpec) -> Self {
        Self {
            spec,
            coeffs: vec![T::zero(); spec.basis_size()],
        }
    }

    /// Basis function `e_k`.
    pub fn basis(spec: HermiteSpec, k: [usize; 3]) -> Result<Self> {
        let i = spec
            .index(k)
            .ok_or_else(|| Error::InvalidSpec(format!("multi-index {k:?} is truncated away")))?;
        let mut c = Self::zeros(spec);
        c.coeffs[i] = T::from_real(1.0);
        Ok(c)
    }

    pub fn spec(&self) -> HermiteSpec {
        self.spec
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, k: [usize; 3]) -> T {
        self.spec.index(k).map_or(T::zero(), |i| self.coeffs[i])
    }

    /// Copy into another truncation, dropping indices it does not retain.
    pub fn embed(&self, spec: HermiteSpec) -> Self {
        assert_eq!(spec.velocity_dim, self.spec.velocity_dim);
        let mut out = Self::zeros(spec);
        for (i, k) in self.spec.multi_indices().enumerate() {
            if let Some(j) = spec.index(k) {
                out.coeffs[j] = self.coeffs[i];
            }
        }
        out
    }

    /// `sum_k c_k conj(c'_k)`.
    pub fn inner(&self, other: &Self) -> T {
        assert_eq!(self.spec, other.spec);
        let mut acc = T::zero();
        for (x, y) in self.coeffs.iter().zip(&other.coeffs) {
            acc += *x * y.conj();
        }
        acc
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs_sqr()).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            spec: self.spec,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&x, &y)| x + y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Linearized Fokker-Planck operator: `(L c)_k = -|k|_1 c_k`.
    pub fn fokker_planck(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * -(self.spec.total_degree(i) as f64))
            .collect();
        Self {
            spec: self.spec,
            coeffs,
        }
    }

    fn ladder_into(&self, dst: HermiteSpec, axis: usize, kind: Ladder) -> Self {
        let mut out = Self::zeros(dst);
        Stencil::new(self.spec, dst, axis, kind).apply_add(&self.coeffs, &mut out.coeffs, 1.0);
        out
    }

    /// `v_axis c`, truncated.
    pub fn v_multiply(&self, axis: usize) -> Self {
        self.ladder_into(self.spec, axis, Ladder::VMultiply)
    }

    /// `d c / d v_axis`, truncated.
    pub fn grad_v(&self, axis: usize) -> Self {
        self.ladder_into(self.spec, axis, Ladder::GradV)
    }

    /// `v_axis c` into a wider truncation (no loss when `dst` has headroom).
    pub fn v_multiply_into(&self, dst: HermiteSpec, axis: usize) -> Self {
        self.ladder_into(dst, axis, Ladder::VMultiply)
    }

    /// `d c / d v_axis` into a wider truncation.
    pub fn grad_v_into(&self, dst: HermiteSpec, axis: usize) -> Self {
        self.ladder_into(dst, axis, Ladder::GradV)
    }

    /// `-w . grad_v c + (w . v) c / 2 = sum_axis w_axis A^dagger_axis c`.
    pub fn raising(&self, w: &[f64]) -> Self {
        assert_eq!(w.len(), self.spec.velocity_dim, "w has wrong length");
        let mut out = Self::zeros(self.spec);
        for (axis, &wa) in w.iter().enumerate() {
            if wa != 0.0 {
                Stencil::new(self.spec, self.spec, axis, Ladder::Raising).apply_add(
                    &self.coeffs,
                    &mut out.coeffs,
                    wa,
                );
            }
        }
        out
    }

    pub fn moments(&self) -> MomentPair<T> {
        MomentPair {
            a: self.coeffs[0],
            b: (0..self.spec.velocity_dim)
                .map(|axis| self.coeffs[self.spec.unit(axis)])
                .collect(),
        }
    }

    /// `P c = a e_0 + sum b_i e_i`, its complement, and the moments.
    pub fn project_macro(&self) -> MacroMicro<T> {
        let moments = self.moments();
        let mut macro_part = Self::zeros(self.spec);
        macro_part.coeffs[0] = moments.a;
        for (axis, &b) in moments.b.iter().enumerate() {
            macro_part.coeffs[self.spec.unit(axis)] = b;
        }
        let mut micro = self.clone();
        micro.coeffs[0] = T::zero();
        for axis in 0..self.spec.velocity_dim {
            micro.coeffs[self.spec.unit(axis)] = T::zero();
        }
        MacroMicro {
            macro_part,
            micro,
            moments,
        }
    }

    /// `c - a e_0`.
    pub fn remove_density(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[0] = T::zero();
        out
    }

    /// `int |grad_v c|^2 + (1 + |v|^2) |c|^2 dv`, exact for the truncated
    /// profile (ladder images are taken with one degree of headroom).
    pub fn nu_norm_sq(&self) -> f64 {
        let wide = self.spec.with_headroom(1);
        let mut total = self.norm_sq();
        for axis in 0..self.spec.velocity_dim {
            total += self.v_multiply_into(wide, axis).norm_sq();
            total += self.grad_v_into(wide, axis).norm_sq();
        }
        total
    }

    /// `< (v_i v_j - delta_ij) sqrt(M), c >`.
    pub fn gamma_moment(&self, i: usize, j: usize) -> T {
        assert!(i < self.spec.velocity_dim && j < self.spec.velocity_dim);
        let mut k = [0; 3];
        k[i] += 1;
        k[j] += 1;
        let scale = if i == j {
            std::f64::consts::SQRT_2
        } else {
            1.0
        };
        self.get(k) * scale
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// Gram matrix of the `nu`-form on the basis of `spec`.
pub fn nu_gram(spec: HermiteSpec) -> nalgebra::DMatrix<f64> {
    let wide = spec.with_headroom(1);
    let n = spec.basis_size();
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let e = VelocityCoeffs::<f64>::basis(spec, spec.multi_index(i)).expect("in range");
        let mut img = e.coeffs().to_vec();
        for axis in 0..spec.velocity_dim() {
            img.extend_from_slice(e.v_multiply_into(wide, axis).coeffs());
            img.extend_from_slice(e.grad_v_into(wide, axis).coeffs());
        }
        images.push(img);
    }
    nalgebra::DMatrix::from_fn(n, n, |i, j| {
        images[i].iter().zip(&images[j]).map(|(x, y)| x * y).sum()
    })
}

/// Sharp constants in the coercivity estimates of the Fokker-Planck operator
/// on a truncation:
///
/// * `without_density`: largest `l` with `-<L c, c> >= l |c - a e_0|_nu^2`,
/// * `without_macro`: largest `l` with
///   `-<L c, c> >= l |(I - P) c|_nu^2 + |b|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coercivity {
    pub without_density: f64,
    pub without_macro: f64,
}

impl Coercivity {
    pub fn min(&self) -> f64 {
        self.without_density.min(self.without_macro)
    }
}

/// Computes [`Coercivity`] exactly as generalized eigenvalues of the
/// dissipation form against the `nu`-form.
pub fn coercivity_constants(spec: HermiteSpec) -> Coercivity {
    let gram = nu_gram(spec);
    let sharp = |keep: &dyn Fn(usize) -> bool| -> f64 {
        let idx: Vec<usize> = (0..spec.basis_size()).filter(|&i| keep(i)).collect();
        let m = idx.len();
        // min c^T D c / c^T N c = 1 / max eig(D^{-1/2} N D^{-1/2}).
        let scaled = nalgebra::DMatrix::from_fn(m, m, |p, q| {
            let (i, j) = (idx[p], idx[q]);
            gram[(i, j)] / ((spec.total_degree(i) as f64) * (spec.total_degree(j) as f64)).sqrt()
        });
        let top = nalgebra::SymmetricEigen::new(scaled)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        1.0 / top
    };
    Coercivity {
        without_density: sharp(&|i| spec.total_degree(i) >= 1),
        without_macro: sharp(&|i| spec.total_degree(i) >= 2),
    }
}

#[cfg(test)]
mod tests;
