use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: endpoints must be finite with a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("distribution has no atom with positive probability")]
    EmptySupport,

    #[error("value {value} lies outside [{a}, {b}]")]
    OutOfInterval { value: f64, a: f64, b: f64 },

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("exponent {n} exceeds the degree cap {cap}")]
    DegreeCapExceeded { n: u32, cap: u32 },

    #[error("interval mismatch: {0}")]
    IntervalMismatch(String),

    #[error("derivative of order {requested} unavailable (max {available})")]
    DerivativeOrderUnavailable { requested: usize, available: usize },

    #[error("utility is not defined at x = {x}")]
    EvaluationDomain { x: f64 },

    #[error("first derivative vanishes at x = {x}")]
    VanishingFirstDerivative { x: f64 },

    #[error("order n = {n} not allowed here (need n >= {min})")]
    BadOrder { n: u32, min: u32 },

    #[error("base function is negative at x = {x}")]
    NegativeBase { x: f64 },

    #[error("function table is not convex (second difference {value:e} at x = {x})")]
    NotConvex { x: f64, value: f64 },

    #[error("function table is not decreasing (first difference {value:e} at x = {x})")]
    NotDecreasing { x: f64, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("portfolio problem is infeasible: {0}")]
    Infeasible(String),

    #[error("iteration limit reached without a feasible point")]
    IterationLimit,

    #[error("constraint direction LPM(portfolio) >= LPM(benchmark) is not supported")]
    UnsupportedDirection,

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the caller's data rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NumericalFailure(_) | Error::IterationLimit | Error::Infeasible(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            _ => Error::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
