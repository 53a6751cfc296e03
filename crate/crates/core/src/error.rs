use thiserror::Error;

/// Errors raised by the library. Numeric diagnostics (violations, residuals)
/// are reported as data and never surface here.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the two infinite words are equal")]
    EqualWords,

    #[error("cylinder budget exceeded: {requested} > {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("no convergence in {context} (residual {residual:e})")]
    NoConvergence { context: &'static str, residual: f64 },

    #[error("operation only supports affine maps")]
    UnsupportedKind,

    #[error("map {index} has |f'| = {slope} >= 1/2 somewhere on the domain")]
    ContractionTooWeak { index: usize, slope: f64 },

    #[error("matrix {index} is singular")]
    SingularMatrix { index: usize },

    #[error("matrix {index} does not induce a contraction (sup |f'| = {norm})")]
    NotContracting { index: usize, norm: f64 },

    #[error("word {word} has zero mass in exactly one of the measures")]
    ZeroMass { word: String },

    #[error("parameter gap is zero")]
    DegenerateGap,

    #[error("Lyapunov exponent must be positive, got {0}")]
    NonpositiveLyapunov(f64),

    #[error("smallest radius {radius} contains no samples")]
    EmptyBall { radius: f64 },

    #[error("matrix tuple is outside the admissible set")]
    NotInU,

    #[error("measure is only known up to depth {available}, requested {requested}")]
    DepthUnavailable { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of a numeric procedure (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::BudgetExceeded { .. }
        )
    }
}
