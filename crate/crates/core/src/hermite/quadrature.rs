//! Brute-force Gauss-Hermite oracle for the velocity operators.
//!
//! Basis functions are sampled on a high-order node set, operators are
//! applied by exact differentiation of the closed-form basis, and results
//! are projected back with the quadrature rule. Nothing here uses the
//! ladder stencils, so it is an independent check of them.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{HermiteSpec, VelocityCoeffs};
use crate::error::{Error, Result};

/// Largest degree cap the oracle is certified for.
pub const ORACLE_MAX_CAP: usize = 16;

/// Gauss rule for the standard normal measure `exp(-v^2/2)/sqrt(2 pi) dv`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        // Jacobi matrix of the orthonormal probabilists' Hermite recurrence.
        let jacobi = DMatrix::from_fn(n, n, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let (h, dh, _) = hermite_values(n, *x);
                let step = h[n] / dh[n];
                *x -= step;
                if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                    break;
                }
            }
            let (h, _, _) = hermite_values(n - 1, *x);
            weights.push(1.0 / h.iter().map(|v| v * v).sum::<f64>());
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(V)]` for `V ~ N(0, 1)`.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// Orthonormal Hermite polynomials `He_k / sqrt(k!)` for `k = 0..=m` at `x`,
/// with first and second derivatives, by differentiating the recurrence.
pub fn hermite_values(m: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut h = vec![0.0; m + 1];
    let mut d1 = vec![0.0; m + 1];
    let mut d2 = vec![0.0; m + 1];
    h[0] = 1.0;
    if m >= 1 {
        h[1] = x;
        d1[1] = 1.0;
    }
    for k in 1..m {
        let a = 1.0 / ((k + 1) as f64).sqrt();
        let b = (k as f64).sqrt();
        h[k + 1] = a * (x * h[k] - b * h[k - 1]);
        d1[k + 1] = a * (h[k] + x * d1[k] - b * d1[k - 1]);
        d2[k + 1] = a * (2.0 * d1[k] + x * d2[k] - b * d2[k - 1]);
    }
    (h, d1, d2)
}

/// Operators the oracle can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleOp {
    FokkerPlanck,
    VMultiply(usize),
    GradV(usize),
    NuForm,
    Gamma(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutput {
    Coeffs(VelocityCoeffs),
    Value(f64),
}

impl OracleOutput {
    pub fn coeffs(self) -> Option<VelocityCoeffs> {
        match self {
            OracleOutput::Coeffs(c) => Some(c),
            OracleOutput::Value(_) => None,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            OracleOutput::Value(v) => Some(v),
            OracleOutput::Coeffs(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Table {
    Gram,
    VMul,
    Grad,
    Fp,
    GradGram,
    V2Gram,
}

/// One-dimensional Galerkin tables `<phi_j, T phi_k>` on degrees `0..=cap`.
#[derive(Debug, Clone)]
struct AxisTables {
    gram: DMatrix<f64>,
    vmul: DMatrix<f64>,
    grad: DMatrix<f64>,
    fp: DMatrix<f64>,
    grad_gram: DMatrix<f64>,
    v2_gram: DMatrix<f64>,
    mean: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl AxisTables {
    fn table(&self, t: Table) -> &DMatrix<f64> {
        match t {
            Table::Gram => &self.gram,
            Table::VMul => &self.vmul,
            Table::Grad => &self.grad,
            Table::Fp => &self.fp,
            Table::GradGram => &self.grad_gram,
            Table::V2Gram => &self.v2_gram,
        }
    }

    fn new(cap: usize, rule: &GaussHermite) -> Self {
        let n = cap + 1;
        let mut t = AxisTables {
            gram: DMatrix::zeros(n, n),
            vmul: DMatrix::zeros(n, n),
            grad: DMatrix::zeros(n, n),
            fp: DMatrix::zeros(n, n),
            grad_gram: DMatrix::zeros(n, n),
            v2_gram: DMatrix::zeros(n, n),
            mean: vec![0.0; n],
            first: vec![0.0; n],
            second: vec![0.0; n],
        };
        for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
            let (h, d1, d2) = hermite_values(cap, x);
            // phi_k = h_k sqrt(M):  d phi_k / dv = (h_k' - x h_k / 2) sqrt(M),
            // L phi_k = (h_k'' - x h_k') sqrt(M).
            let dphi: Vec<f64> = (0..n).map(|k| d1[k] - 0.5 * x * h[k]).collect();
            let lphi: Vec<f64> = (0..n).map(|k| d2[k] - x * d1[k]).collect();
            for j in 0..n {
                t.mean[j] += w * h[j];
                t.first[j] += w * x * h[j];
                t.second[j] += w * (x * x - 1.0) * h[j];
                for k in 0..n {
                    t.gram[(j, k)] += w * h[j] * h[k];
                    t.vmul[(j, k)] += w * h[j] * x * h[k];
                    t.grad[(j, k)] += w * h[j] * dphi[k];
                    t.fp[(j, k)] += w * h[j] * lphi[k];
                    t.grad_gram[(j, k)] += w * dphi[j] * dphi[k];
                    t.v2_gram[(j, k)] += w * x * x * h[j] * h[k];
                }
            }
        }
        t
    }
}

/// Quadrature oracle for a fixed truncation with `degree_cap <= 16`.
#[derive(Debug, Clone)]
pub struct QuadratureOracle {
    spec: HermiteSpec,
    axes: Vec<AxisTables>,
    node_count: usize,
}

impl QuadratureOracle {
    pub fn new(spec: HermiteSpec) -> Result<Self> {
        if spec.degree_cap() > ORACLE_MAX_CAP {
            return Err(Error::OracleRange(spec.degree_cap()));
        }
        let node_count = 4 * spec.degree_cap() + 8;
        let rule = GaussHermite::new(node_count);
        let caps = spec.caps();
        let axes = (0..spec.velocity_dim())
            .map(|a| AxisTables::new(caps[a], &rule))
            .collect();
        Ok(Self {
            spec,
            axes,
            node_count,
        })
    }

    pub fn spec(&self) -> HermiteSpec {
        self.spec
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Tensor-product matrix element with `table` on `axis` and the Gram
    /// factor on every other axis.
    fn element(&self, out: [usize; 3], src: [usize; 3], axis: usize, table: Table) -> f64 {
        let mut prod = 1.0;
        for (a, t) in self.axes.iter().enumerate() {
            let m = if a == axis { t.table(table) } else { &t.gram };
            prod *= m[(out[a], src[a])];
        }
        prod
    }

    fn apply_linear(&self, c: &VelocityCoeffs, terms: &[(usize, Table)]) -> VelocityCoeffs {
        let spec = self.spec;
        let mut out = VelocityCoeffs::zeros(spec);
        for i in 0..spec.basis_size() {
            let ki = spec.multi_index(i);
            let mut acc = 0.0;
            for (s, &cs) in c.coeffs().iter().enumerate() {
                if cs == 0.0 {
                    continue;
                }
                let ks = spec.multi_index(s);
                for &(axis, table) in terms {
                    acc += self.element(ki, ks, axis, table) * cs;
                }
            }
            out.coeffs_mut()[i] = acc;
        }
        out
    }

    pub fn apply(&self, c: &VelocityCoeffs, op: OracleOp) -> Result<OracleOutput> {
        if c.spec() != self.spec {
            return Err(Error::Shape(
                "oracle built for a different truncation".into(),
            ));
        }
        let dv = self.spec.velocity_dim();
        let check_axis = |a: usize| {
            if a < dv {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("axis {a} out of range")))
            }
        };
        Ok(match op {
            OracleOp::FokkerPlanck => {
                let terms: Vec<(usize, Table)> = (0..dv).map(|a| (a, Table::Fp)).collect();
                OracleOutput::Coeffs(self.apply_linear(c, &terms))
            }
            OracleOp::VMultiply(axis) => {
                check_axis(axis)?;
                OracleOutput::Coeffs(self.apply_linear(c, &[(axis, Table::VMul)]))
            }
            OracleOp::GradV(axis) => {
                check_axis(axis)?;
                OracleOutput::Coeffs(self.apply_linear(c, &[(axis, Table::Grad)]))
            }
            OracleOp::NuForm => {
                let spec = self.spec;
                let mut total = 0.0;
                for (i, &ci) in c.coeffs().iter().enumerate() {
                    let ki = spec.multi_index(i);
                    for (s, &cs) in c.coeffs().iter().enumerate() {
                        let ks = spec.multi_index(s);
                        let mut form = self.element(ki, ks, 0, Table::Gram);
                        for axis in 0..dv {
                            form += self.element(ki, ks, axis, Table::GradGram);
                            form += self.element(ki, ks, axis, Table::V2Gram);
                        }
                        total += ci * form * cs;
                    }
                }
                OracleOutput::Value(total)
            }
            OracleOp::Gamma(i, j) => {
                check_axis(i)?;
                check_axis(j)?;
                let spec = self.spec;
                let mut total = 0.0;
                for (s, &cs) in c.coeffs().iter().enumerate() {
                    let k = spec.multi_index(s);
                    let mut prod = 1.0;
                    for (a, t) in self.axes.iter().enumerate() {
                        prod *= if i == j && a == i {
                            t.second[k[a]]
                        } else if i != j && (a == i || a == j) {
                            t.first[k[a]]
                        } else {
                            t.mean[k[a]]
                        };
                    }
                    total += prod * cs;
                }
                OracleOutput::Value(total)
            }
        })
    }
}
