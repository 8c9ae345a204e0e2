use thiserror::Error;

/// Errors produced by the solvers, diagnostics and run driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain specification: {0}")]
    InvalidSpec(String),
    #[error("no analytic boundary chart for {0}")]
    UnsupportedBoundary(String),
    #[error("operation not supported on this geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("degenerate coordinate map: {0}")]
    DegenerateMap(String),
    #[error("field is not sampled on the collar of this map (expected {expected} nodes, got {got})")]
    OutOfCollar { expected: usize, got: usize },
    #[error("denominator below 1e-14; ratio not applicable")]
    ZeroDenominator,
    #[error("incompatible Neumann data: |int f - int g| = {defect:e}")]
    Incompatible { defect: f64 },
    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("degenerate state: right-hand side norm below 1e-14")]
    DegenerateState,
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("nonpositive density (min {min:e})")]
    NonpositiveDensity { min: f64 },
    #[error("CFL bound violated: dt = {dt:e} > {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("grid resolution {got} too low for order {order} (need {need})")]
    ResolutionTooLow { order: usize, need: usize, got: usize },
    #[error("cutoff support leaks outside chart {0}")]
    ChartCoverage(String),
    #[error("insufficient data for fit: {0}")]
    InsufficientData(String),
    #[error("nonpositive energy sample at t = {t}")]
    NonpositiveEnergy { t: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
