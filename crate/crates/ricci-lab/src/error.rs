use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is outside the chart domain: {0}")]
    PointOutsideChart(String),
    #[error("points are not within the injectivity radius")]
    OutsideInjectivityRadius,
    #[error("point is not on the boundary")]
    NotABoundaryPoint,
    #[error("cutoff radius {r_c} too large (limit {limit})")]
    CutoffTooLarge { r_c: f64, limit: f64 },
    #[error("path {path_index} left the guard ball at t = {t}")]
    DivergedPath { path_index: u64, t: f64 },
    #[error("step size h = {h} too large for injectivity radius {inj}")]
    StepTooLarge { h: f64, inj: f64 },
    #[error("interval [{s}, {t}] is not on the path grid")]
    IntervalOutsideGrid { s: f64, t: f64 },
    #[error("need at least {min} paths, got {got}")]
    TooFewPaths { got: usize, min: usize },
    #[error("nested conditional sampling deeper than one level")]
    NestedDepthExceeded,
    #[error("weight moment E[exp(-(2+eps)K)] is not finite")]
    MomentCheckFailed,
    #[error("test function is not positive along sampled paths (value {0})")]
    NonPositiveF(f64),
    #[error("optimizer denominator {0:e} below threshold")]
    DegenerateOptimizer(f64),
    #[error("t-grid needs at least 3 points, got {0}")]
    GridTooCoarse(usize),
    #[error("dimension {0} not supported")]
    UnsupportedDimension(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
