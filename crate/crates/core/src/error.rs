use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degree {0} is below the minimum of 2")]
    DegreeTooSmall(usize),
    #[error("expected {expected} coefficients for degree {degree}, got {actual}")]
    WrongCoefficientCount {
        degree: usize,
        expected: usize,
        actual: usize,
    },
    #[error("polynomial value overflowed to infinity")]
    OverflowToInfinity,
    #[error("critical point polishing left residual {residual:e} at {root}")]
    RootFindingFailed { root: String, residual: f64 },
    #[error("no critical point escapes within the iteration budget")]
    NoEscapingCritical,
    #[error("point does not escape within the iteration budget")]
    NotEscaping,
    #[error("derivative of the iterate vanishes along the orbit")]
    SingularPoint,
    #[error("point lies at Green level {green} which does not exceed M = {max_critical}")]
    BelowFundamentalLevel { green: f64, max_critical: f64 },
    #[error("level {0} is a critical level of the Green function")]
    SingularLevel(f64),
    #[error("level curve tracing lost the curve: {0}")]
    LostCurve(String),
    #[error("grid resolution too coarse to separate components at layer {layer}")]
    ResolutionTooCoarse { layer: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("stretch values are not strictly increasing and positive")]
    NotMonotone,
    #[error("endpoint values violate the functional equation: {0}")]
    FunctionalEquationViolated(String),
    #[error("class data has {actual} entries, expected {expected}")]
    ClassLengthMismatch { expected: usize, actual: usize },
    #[error("Green level {0} sits on a break of the piecewise-linear model")]
    OnLevelBreak(f64),
    #[error("point {0} is outside the right half-plane")]
    OutOfDomain(String),
    #[error("coordinate lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("classes are defined over different critical level data")]
    BaseMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable code, used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegreeTooSmall(_) => "DEGREE_TOO_SMALL",
            Error::WrongCoefficientCount { .. } => "WRONG_COEFFICIENT_COUNT",
            Error::OverflowToInfinity => "OVERFLOW_TO_INFINITY",
            Error::RootFindingFailed { .. } => "ROOT_FINDING_FAILED",
            Error::NoEscapingCritical => "NO_ESCAPING_CRITICAL",
            Error::NotEscaping => "NOT_ESCAPING",
            Error::SingularPoint => "SINGULAR_POINT",
            Error::BelowFundamentalLevel { .. } => "BELOW_FUNDAMENTAL_LEVEL",
            Error::SingularLevel(_) => "SINGULAR_LEVEL",
            Error::LostCurve(_) => "LOST_CURVE",
            Error::ResolutionTooCoarse { .. } => "RESOLUTION_TOO_COARSE",
            Error::UnknownVertex(_) => "UNKNOWN_VERTEX",
            Error::NotMonotone => "NOT_MONOTONE",
            Error::FunctionalEquationViolated(_) => "FUNCTIONAL_EQUATION_VIOLATED",
            Error::ClassLengthMismatch { .. } => "CLASS_LENGTH_MISMATCH",
            Error::OnLevelBreak(_) => "ON_LEVEL_BREAK",
            Error::OutOfDomain(_) => "OUT_OF_DOMAIN",
            Error::LengthMismatch(..) => "LENGTH_MISMATCH",
            Error::BaseMismatch => "BASE_MISMATCH",
            Error::InvalidArgument(_) => "INVALID_ARGUMENT",
        }
    }
}
