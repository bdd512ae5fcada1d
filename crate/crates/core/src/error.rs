use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unbranched dispersion: kappa = {kappa} has no cusps")]
    UnbranchedDispersion { kappa: f64 },

    #[error("off-branch momentum: p = {p} is outside the range of branch {branch}")]
    OffBranchMomentum { p: f64, branch: usize },

    #[error("off-branch coordinate: q = {q} is outside the range of branch {branch}")]
    OffBranchCoordinate { q: f64, branch: usize },

    #[error(
        "junction at {coordinate} is not a grid node (offset {offset:e} in units of the spacing)"
    )]
    JunctionOffGrid { coordinate: f64, offset: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("potential of degree {degree} exceeds the supported maximum of 4")]
    DegreeTooHigh { degree: usize },

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    #[error("matrix is not Hermitian: defect {defect:e} exceeds {threshold:e}")]
    NotHermitian { defect: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigensolver(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("singular Crank-Nicolson system for dt = {dt}")]
    SingularPropagator { dt: f64 },

    #[error("dt max|lambda| = {product} exceeds the budget {budget}")]
    StabilityBudget { product: f64, budget: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("weighted vertex {vertex} violates sum(beta |kappa|^2) = 0: value {value:e}")]
    WeightConstraint { vertex: usize, value: f64 },

    #[error("phase-space degeneracy: |3 xdot^2 - kappa| = {gap:e} at xdot = {xdot}")]
    Degeneracy { xdot: f64, gap: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
