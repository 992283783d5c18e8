//! Periodic Fourier pseudospectral machinery.
//!
//! Transforms use the unnormalized forward DFT and `1/n^d` on the inverse.
//! Point `p` of a `d`-dimensional grid has axis indices
//! `p = j0 + n (j1 + n j2)`; the same layout indexes Fourier modes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::hermite::{HermiteSpec, Ladder, Stencil, VelocityCoeffs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    space_dim: usize,
    points_per_axis: usize,
    domain_length: f64,
}

impl SpatialGrid {
    pub fn new(space_dim: usize, points_per_axis: usize, domain_length: f64) -> Result<Self> {
        if space_dim != 1 && space_dim != 3 {
            return Err(Error::InvalidGrid(format!(
                "space_dim must be 1 or 3, got {space_dim}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points_per_axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain_length must be positive and finite, got {domain_length}"
            )));
        }
        Ok(Self {
            space_dim,
            points_per_axis,
            domain_length,
        })
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn num_points(&self) -> usize {
        self.points_per_axis.pow(self.space_dim as u32)
    }

    pub fn dx(&self) -> f64 {
        self.domain_length / self.points_per_axis as f64
    }

    pub fn volume(&self) -> f64 {
        self.domain_length.powi(self.space_dim as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.num_points() as f64
    }

    /// Per-axis indices of point (or mode) `p`; unused axes are 0.
    pub fn axis_indices(&self, p: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0; 3];
        let mut r = p;
        for slot in out.iter_mut().take(self.space_dim) {
            *slot = r % n;
            r /= n;
        }
        out
    }

    pub fn coordinate(&self, p: usize) -> [f64; 3] {
        let j = self.axis_indices(p);
        let dx = self.dx();
        [j[0] as f64 * dx, j[1] as f64 * dx, j[2] as f64 * dx]
    }

    /// Signed integer wavenumber of DFT index `j` (Nyquist maps to `-n/2`).
    pub fn signed_index(&self, j: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.domain_length
    }

    /// Wavevector of mode `p`.
    pub fn wavevector(&self, p: usize) -> [f64; 3] {
        let j = self.axis_indices(p);
        let k0 = self.fundamental();
        let mut xi = [0.0; 3];
        for a in 0..self.space_dim {
            xi[a] = self.signed_index(j[a]) as f64 * k0;
        }
        xi
    }

    /// Largest retained integer wavenumber under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.points_per_axis / 3
    }

    /// Sample a function of position.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        (0..self.num_points())
            .map(|p| f(self.coordinate(p)))
            .collect()
    }

    /// Grid quadrature `int g dx`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.cell_volume()
    }
}

fn check_len(grid: &SpatialGrid, len: usize, what: &str) -> Result<()> {
    if len != grid.num_points() {
        return Err(Error::Shape(format!(
            "{what}: expected {} values, got {len}",
            grid.num_points()
        )));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len(), "scalar field")?;
        check_finite(&values, "scalar field")?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_points()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self {
            grid,
            values: grid.sample(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: SpatialGrid,
    /// One array per spatial axis.
    pub components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: SpatialGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.space_dim() {
            return Err(Error::Shape(format!(
                "vector field: expected {} components, got {}",
                grid.space_dim(),
                components.len()
            )));
        }
        for c in &components {
            check_len(&grid, c.len(), "vector field")?;
            check_finite(c, "vector field")?;
        }
        Ok(Self { grid, components })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            components: vec![vec![0.0; grid.num_points()]; grid.space_dim()],
        }
    }

    /// Values of all components at point `p`.
    pub fn at(&self, p: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[p]).collect()
    }
}

/// Hermite coefficients of `f(x, v)` at every grid point, stored
/// coefficient-major: `coeffs[k][p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticField {
    pub grid: SpatialGrid,
    pub spec: HermiteSpec,
    pub coeffs: Vec<Vec<f64>>,
}

impl KineticField {
    pub fn new(grid: SpatialGrid, spec: HermiteSpec, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if spec.velocity_dim() != grid.space_dim() {
            return Err(Error::Shape(format!(
                "velocity_dim {} does not match space_dim {}",
                spec.velocity_dim(),
                grid.space_dim()
            )));
        }
        if coeffs.len() != spec.basis_size() {
            return Err(Error::Shape(format!(
                "kinetic field: expected {} coefficient arrays, got {}",
                spec.basis_size(),
                coeffs.len()
            )));
        }
        for c in &coeffs {
            check_len(&grid, c.len(), "kinetic field")?;
            check_finite(c, "kinetic field")?;
        }
        Ok(Self { grid, spec, coeffs })
    }

    pub fn zeros(grid: SpatialGrid, spec: HermiteSpec) -> Self {
        Self {
            grid,
            spec,
            coeffs: vec![vec![0.0; grid.num_points()]; spec.basis_size()],
        }
    }

    pub fn point(&self, p: usize) -> VelocityCoeffs {
        let v = self.coeffs.iter().map(|c| c[p]).collect();
        VelocityCoeffs::new(self.spec, v).expect("field entries are finite")
    }

    pub fn set_point(&mut self, p: usize, c: &VelocityCoeffs) {
        assert_eq!(c.spec(), self.spec);
        for (arr, &v) in self.coeffs.iter_mut().zip(c.coeffs()) {
            arr[p] = v;
        }
    }

    /// Density moment `a(x)`.
    pub fn density(&self) -> &[f64] {
        &self.coeffs[0]
    }

    /// Momentum moment `b_axis(x)`.
    pub fn momentum(&self, axis: usize) -> &[f64] {
        &self.coeffs[self.spec.unit(axis)]
    }

    /// `{I - P} f`.
    pub fn micro(&self) -> KineticField {
        let mut out = self.clone();
        out.coeffs[0].iter_mut().for_each(|v| *v = 0.0);
        for axis in 0..self.spec.velocity_dim() {
            out.coeffs[self.spec.unit(axis)]
                .iter_mut()
                .for_each(|v| *v = 0.0);
        }
        out
    }
}

/// Smooth radial cutoff: 1 for `rho <= 1/2`, 0 for `rho >= 1`.
pub fn cutoff_profile(rho: f64) -> f64 {
    if rho <= 0.5 {
        1.0
    } else if rho >= 1.0 {
        0.0
    } else {
        let s = 2.0 * rho - 1.0;
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// `sup_rho (1 - cutoff(rho)) / rho`, the constant in
/// `|g^H| <= (C / r0) |grad g|`.
pub fn high_frequency_constant() -> f64 {
    let ratio = |rho: f64| (1.0 - cutoff_profile(rho)) / rho;
    let samples = 200_000;
    let (mut best_rho, mut best) = (1.0, 1.0);
    for i in 0..=samples {
        let rho = 0.5 + 0.5 * i as f64 / samples as f64;
        let r = ratio(rho);
        if r > best {
            best = r;
            best_rho = rho;
        }
    }
    // Golden-section refinement around the best sample.
    let h = 0.5 / samples as f64;
    let (mut a, mut b) = (best_rho - h, best_rho + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if ratio(c) > ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(ratio(0.5 * (a + b)))
}

/// `sum_{|alpha| <= s} xi^{2 alpha}` over multi-indices in `dim` dimensions.
pub fn sobolev_weight(xi: [f64; 3], dim: usize, s: usize) -> f64 {
    let sq = [xi[0] * xi[0], xi[1] * xi[1], xi[2] * xi[2]];
    let mut total = 0.0;
    match dim {
        1 => {
            let mut p = 1.0;
            for _ in 0..=s {
                total += p;
                p *= sq[0];
            }
        }
        _ => {
            for a0 in 0..=s {
                for a1 in 0..=(s - a0) {
                    for a2 in 0..=(s - a0 - a1) {
                        total +=
                            sq[0].powi(a0 as i32) * sq[1].powi(a1 as i32) * sq[2].powi(a2 as i32);
                    }
                }
            }
        }
    }
    total
}

/// Velocity multi-indices `beta` with `|beta| <= s`.
pub fn velocity_multi_indices(dim: usize, s: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for b0 in 0..=s {
        if dim == 1 {
            out.push([b0, 0, 0]);
            continue;
        }
        for b1 in 0..=(s - b0) {
            for b2 in 0..=(s - b0 - b1) {
                out.push([b0, b1, b2]);
            }
        }
    }
    out
}

/// Sparse Hermitian form on Hermite coefficients: `sum conj(g_i) Q_ij g_j`.
#[derive(Debug, Clone)]
pub struct VelocityForm {
    entries: Vec<(usize, usize, f64)>,
}

impl VelocityForm {
    pub fn from_matrix(q: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..q.nrows() {
            for j in 0..q.ncols() {
                if q[(i, j)] != 0.0 {
                    entries.push((i, j, q[(i, j)]));
                }
            }
        }
        Self { entries }
    }

    /// Gram matrix `M^T M` of a linear map given as column images.
    pub fn from_images(images: &[Vec<f64>]) -> Self {
        let n = images.len();
        let q = DMatrix::from_fn(n, n, |i, j| {
            images[i].iter().zip(&images[j]).map(|(x, y)| x * y).sum()
        });
        Self::from_matrix(&q)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    /// The `L^2` form of `d^beta_v g`, taken with `|beta|` degrees of headroom.
    pub fn velocity_derivative(spec: HermiteSpec, beta: [usize; 3]) -> Self {
        let order: usize = beta.iter().sum();
        let wide = spec.with_headroom(order);
        let mut steps = Vec::new();
        for (axis, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                steps.push(Stencil::new(wide, wide, axis, Ladder::GradV));
            }
        }
        let images: Vec<Vec<f64>> = (0..spec.basis_size())
            .map(|i| {
                let mut g = VelocityCoeffs::<f64>::basis(spec, spec.multi_index(i))
                    .expect("in range")
                    .embed(wide)
                    .into_coeffs();
                for st in &steps {
                    let mut next = vec![0.0; g.len()];
                    st.apply_add(&g, &mut next, 1.0);
                    g = next;
                }
                g
            })
            .collect();
        Self::from_images(&images)
    }

    /// The `nu`-form of `d^beta_v g` restricted to `{I - P}` input when
    /// `micro_only` is set. Headroom `|beta| + 1` keeps it exact.
    pub fn nu_of_derivative(spec: HermiteSpec, beta: [usize; 3], micro_only: bool) -> Self {
        let order: usize = beta.iter().sum();
        let wide = spec.with_headroom(order);
        let widest = spec.with_headroom(order + 1);
        let mut steps = Vec::new();
        for (axis, &b) in beta.iter().enumerate() {
            for _ in 0..b {
                steps.push(Stencil::new(wide, wide, axis, Ladder::GradV));
            }
        }
        let dv = spec.velocity_dim();
        let images: Vec<Vec<f64>> = (0..spec.basis_size())
            .map(|i| {
                let k = spec.multi_index(i);
                if micro_only && k.iter().sum::<usize>() <= 1 {
                    return vec![0.0; wide.basis_size() * (1 + 2 * dv)];
                }
                let mut g = VelocityCoeffs::<f64>::basis(spec, k)
                    .expect("in range")
                    .embed(wide)
                    .into_coeffs();
                for st in &steps {
                    let mut next = vec![0.0; g.len()];
                    st.apply_add(&g, &mut next, 1.0);
                    g = next;
                }
                let g = VelocityCoeffs::new(wide, g).expect("finite");
                let mut img = g.coeffs().to_vec();
                for axis in 0..dv {
                    img.extend_from_slice(g.v_multiply_into(widest, axis).coeffs());
                    img.extend_from_slice(g.grad_v_into(widest, axis).coeffs());
                }
                img
            })
            .collect();
        Self::from_images(&images)
    }

    pub fn eval<T: crate::scalar::Scalar>(&self, g: &[T]) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, q)| (g[i].conj() * g[j]).re() * q)
            .sum()
    }
}

/// FFT plans and spectral operators for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: SpatialGrid,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Signed wavenumbers per axis index, scaled by `2 pi / L`.
    k: Vec<f64>,
    /// Same with the Nyquist entry zeroed (odd-order derivatives).
    k_odd: Vec<f64>,
    keep: Vec<bool>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("grid", &self.grid)
            .finish()
    }
}

impl Spectral {
    pub fn new(grid: SpatialGrid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let k0 = grid.fundamental();
        let k: Vec<f64> = (0..n).map(|j| grid.signed_index(j) as f64 * k0).collect();
        let k_odd = (0..n)
            .map(|j| if j == n / 2 { 0.0 } else { k[j] })
            .collect();
        let cut = grid.dealias_cutoff() as i64;
        let keep = (0..n).map(|j| grid.signed_index(j).abs() <= cut).collect();
        Self {
            grid,
            fft,
            ifft,
            k,
            k_odd,
            keep,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.points_per_axis();
        let plan = if inverse { &self.ifft } else { &self.fft };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        if self.grid.space_dim() == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 1..self.grid.space_dim() {
            let stride = n.pow(axis as u32);
            let block = stride * n;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.grid.num_points());
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse(&self, mut hat: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut hat, true);
        let scale = 1.0 / self.grid.num_points() as f64;
        hat.iter().map(|c| c.re * scale).collect()
    }

    /// Whether mode `p` survives the 2/3 rule.
    pub fn kept(&self, p: usize) -> bool {
        let j = self.grid.axis_indices(p);
        (0..self.grid.space_dim()).all(|a| self.keep[j[a]])
    }

    pub fn dealias_hat(&self, hat: &mut [Complex64]) {
        for (p, h) in hat.iter_mut().enumerate() {
            if !self.kept(p) {
                *h = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn dealias(&self, values: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(values);
        self.dealias_hat(&mut hat);
        self.inverse(hat)
    }

    /// Dealiased product `D(a b)`.
    pub fn product(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.dealias(&ab)
    }

    /// Multiplier `(i k_axis)^order` for mode `p`.
    pub fn derivative_symbol(&self, p: usize, axis: usize, order: usize) -> Complex64 {
        let j = self.grid.axis_indices(p)[axis];
        match order {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, self.k_odd[j]),
            2 => Complex64::new(-self.k[j] * self.k[j], 0.0),
            _ => panic!("derivative order must be 0, 1 or 2"),
        }
    }

    pub fn derivative_hat(&self, hat: &[Complex64], axis: usize, order: usize) -> Vec<Complex64> {
        hat.iter()
            .enumerate()
            .map(|(p, &h)| h * self.derivative_symbol(p, axis, order))
            .collect()
    }

    /// Exact derivative of the trigonometric interpolant.
    pub fn derivative(&self, values: &[f64], axis: usize, order: usize) -> Result<Vec<f64>> {
        if axis >= self.grid.space_dim() {
            return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
        }
        if !(1..=2).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "derivative order must be 1 or 2, got {order}"
            )));
        }
        let hat = self.forward(values);
        Ok(self.inverse(self.derivative_hat(&hat, axis, order)))
    }

    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let hat = self.forward(values);
        let mut acc = vec![Complex64::new(0.0, 0.0); hat.len()];
        for axis in 0..self.grid.space_dim() {
            for (p, a) in acc.iter_mut().enumerate() {
                *a += hat[p] * self.derivative_symbol(p, axis, 2);
            }
        }
        self.inverse(acc)
    }

    pub fn wavevector(&self, p: usize) -> [f64; 3] {
        let j = self.grid.axis_indices(p);
        let mut xi = [0.0; 3];
        for a in 0..self.grid.space_dim() {
            xi[a] = self.k[j[a]];
        }
        xi
    }

    pub fn wavenumber_norm(&self, p: usize) -> f64 {
        let xi = self.wavevector(p);
        (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
    }

    /// Low/high split with cutoff radius `r0`; `low + high` reproduces the
    /// input up to one rounding per entry.
    pub fn freq_split(&self, values: &[f64], r0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "r0 must be positive, got {r0}"
            )));
        }
        let mut hat = self.forward(values);
        for (p, h) in hat.iter_mut().enumerate() {
            *h *= cutoff_profile(self.wavenumber_norm(p) / r0);
        }
        let low = self.inverse(hat);
        let high = values.iter().zip(&low).map(|(v, l)| v - l).collect();
        Ok((low, high))
    }

    /// Low-frequency part only, in Fourier space.
    pub fn low_pass_hat(&self, hat: &[Complex64], r0: f64) -> Vec<Complex64> {
        hat.iter()
            .enumerate()
            .map(|(p, &h)| h * cutoff_profile(self.wavenumber_norm(p) / r0))
            .collect()
    }

    fn mode_scale(&self) -> f64 {
        let n = self.grid.num_points() as f64;
        self.grid.volume() / (n * n)
    }

    /// `int |g|^2 dx` weighted per mode: `(V / N^2) sum_p w(p) |g_p|^2`.
    pub fn weighted_norm_sq(&self, hat: &[Complex64], weight: impl Fn(usize) -> f64) -> f64 {
        let s: f64 = hat
            .iter()
            .enumerate()
            .map(|(p, h)| weight(p) * h.norm_sqr())
            .sum();
        s * self.mode_scale()
    }

    pub fn sobolev_weight(&self, p: usize, s: usize) -> f64 {
        sobolev_weight(self.wavevector(p), self.grid.space_dim(), s)
    }

    /// `sum_{|alpha| <= s} |d^alpha g|^2_{L^2}`.
    pub fn sobolev_norm_sq(&self, values: &[f64], s: usize) -> f64 {
        let hat = self.forward(values);
        self.weighted_norm_sq(&hat, |p| self.sobolev_weight(p, s))
    }

    /// `|grad^k g|^2_{L^2} = int |xi|^{2k} |g_hat|^2`.
    pub fn gradient_power_norm_sq(&self, values: &[f64], k: usize) -> f64 {
        let hat = self.forward(values);
        self.weighted_norm_sq(&hat, |p| self.wavenumber_norm(p).powi(2 * k as i32))
    }

    /// Fourier transform of every Hermite coefficient array.
    pub fn forward_kinetic(&self, f: &KineticField) -> Vec<Vec<Complex64>> {
        f.coeffs.iter().map(|c| self.forward(c)).collect()
    }

    /// `(V / N^2) sum_p w(p) Q(f_hat(p))` for a velocity form `Q`.
    pub fn kinetic_form(
        &self,
        fhat: &[Vec<Complex64>],
        form: &VelocityForm,
        weight: impl Fn(usize) -> f64,
    ) -> f64 {
        let npts = self.grid.num_points();
        let mut total = 0.0;
        let mut g = vec![Complex64::new(0.0, 0.0); fhat.len()];
        for p in 0..npts {
            let w = weight(p);
            if w == 0.0 {
                continue;
            }
            for (slot, arr) in g.iter_mut().zip(fhat) {
                *slot = arr[p];
            }
            total += w * form.eval(&g);
        }
        total * self.mode_scale()
    }

    /// Mixed space-velocity norm
    /// `sum_{|alpha| + |beta| <= s} |d^alpha_x d^beta_v f|^2`.
    pub fn kinetic_sobolev_norm_sq(&self, f: &KineticField, s: usize) -> f64 {
        let fhat = self.forward_kinetic(f);
        let dim = self.grid.space_dim();
        velocity_multi_indices(dim, s)
            .into_iter()
            .map(|beta| {
                let rest = s - beta.iter().sum::<usize>();
                let form = if beta == [0, 0, 0] {
                    VelocityForm::identity(f.spec.basis_size())
                } else {
                    VelocityForm::velocity_derivative(f.spec, beta)
                };
                self.kinetic_form(&fhat, &form, |p| self.sobolev_weight(p, rest))
            })
            .sum()
    }
}
