use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid hermite spec: {0}")]
    InvalidSpec(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("vacuum breach: 1 + rho = {min_density} at grid point {index}")]
    VacuumBreach { min_density: f64, index: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("quadrature oracle only supports degree_cap <= 16, got {0}")]
    OracleRange(usize),

    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("tau configuration breaks energy equivalence: ratio range [{lo}, {hi}]")]
    TauEquivalence { lo: f64, hi: f64 },

    #[error("radial quadrature did not converge (estimated relative error {0:e})")]
    QuadratureNonConvergence(f64),

    #[error("degenerate difference reports: {0}")]
    DegenerateReports(String),

    #[error("unknown initial-data generator `{0}`")]
    UnknownGenerator(String),
}
