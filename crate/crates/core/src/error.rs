use thiserror::Error;

/// Every failure the numerical pipeline can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrError {
    #[error("metric is not positive definite at grid point {index} (det = {det:e})")]
    NonPositiveMetric { index: usize, det: f64 },

    #[error("lapse is not positive at grid point {index} (N = {value:e})")]
    NonPositiveLapse { index: usize, value: f64 },

    #[error("lapse solve did not reach tolerance {tol:e} in {iterations} iterations (residual {residual:e})")]
    SolverDiverged {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("zero-order coefficient |K|^2 vanishes (min = {min:e}); the lapse operator is degenerate")]
    DegenerateZeroOrderTerm { min: f64 },

    #[error("lapse bound violated: {which} margin {margin:e} below -{tol:e}")]
    BoundViolation {
        which: &'static str,
        margin: f64,
        tol: f64,
    },

    #[error("invalid Kasner exponents ({p1}, {p2}, {p3}): sum = {sum}, sum of squares = {sum_sq}")]
    InvalidKasner {
        p1: f64,
        p2: f64,
        p3: f64,
        sum: f64,
        sum_sq: f64,
    },

    #[error("CMC drift {drift:e} exceeds tolerance {tol:e}")]
    CmcDriftExceeded { drift: f64, tol: f64 },

    #[error("time step {dt:e} exceeds stability bound {bound:e}")]
    UnstableTimeStep { dt: f64, bound: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("history is empty")]
    EmptyHistory,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("record at t = {t} lies outside the monitor window [{t0}, {t_star}]")]
    OutsideWindow { t: f64, t0: f64, t_star: f64 },

    #[error("write failed: {0}")]
    Sink(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("bad snapshot: {0}")]
    Snapshot(String),
}

impl BrError {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            BrError::NonPositiveMetric { .. } => "NonPositiveMetric",
            BrError::NonPositiveLapse { .. } => "NonPositiveLapse",
            BrError::SolverDiverged { .. } => "SolverDiverged",
            BrError::DegenerateZeroOrderTerm { .. } => "DegenerateZeroOrderTerm",
            BrError::BoundViolation { .. } => "BoundViolation",
            BrError::InvalidKasner { .. } => "InvalidKasner",
            BrError::CmcDriftExceeded { .. } => "CmcDriftExceeded",
            BrError::UnstableTimeStep { .. } => "UnstableTimeStep",
            BrError::InvalidGrid(_) => "InvalidGrid",
            BrError::GridMismatch => "GridMismatch",
            BrError::EmptyHistory => "EmptyHistory",
            BrError::InvalidState(_) => "InvalidState",
            BrError::OutsideWindow { .. } => "OutsideWindow",
            BrError::Sink(_) => "SinkError",
            BrError::Parse { .. } => "ParseError",
            BrError::Validation(_) => "ValidationError",
            BrError::Snapshot(_) => "SnapshotError",
        }
    }
}

impl From<std::io::Error> for BrError {
    fn from(e: std::io::Error) -> Self {
        BrError::Sink(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BrError>;
