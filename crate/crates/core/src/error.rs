use thiserror::Error;

/// Expression or scene-file syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: String) -> Self {
        ParseError { line, col, msg }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("point {point:?} lies outside the chart box")]
    OutOfChart { point: Vec<f64> },
    #[error("requested order {requested} exceeds the supported order {max}")]
    OrderExceeded { requested: usize, max: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("metric is singular or not positive definite (det = {det:e})")]
    SingularMetric { det: f64 },
    #[error("dimension {m} too small; need at least {need}")]
    DimensionTooSmall { m: usize, need: usize },
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("point is on or too close to the boundary (u = {u:e})")]
    BoundaryPoint { u: f64 },
    #[error("critical point of f (|grad f| = {grad:e})")]
    CriticalPoint { grad: f64 },
    #[error("hypothesis not met for {id}: {hypothesis}")]
    HypothesisUnmet { id: String, hypothesis: String },
    #[error("derivative budget exceeded: {0}")]
    DerivativeBudget(String),
    #[error("sufficiency battery requires alpha > 0 (alpha = {0})")]
    AlphaNonPositive(f64),
    #[error("matrix is not positive semi-definite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("k = {k} out of range 0..={m}")]
    KOutOfRange { k: usize, m: usize },
    #[error("scene is not closed: {0}")]
    NotClosed(String),
    #[error("tensor field is not Codazzi (defect {0:e})")]
    NotCodazzi(f64),
    #[error("u must be positive on the grid (min {0:e})")]
    UPositivityViolated(f64),
    #[error("profile is singular: {0}")]
    ProfileSingular(String),
    #[error("integration did not converge: {0}")]
    NoConvergence(String),
    #[error("tail integral of 1/h diverges")]
    TailDivergent,
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("radial sampler failed: {0}")]
    SamplerFailure(String),
    #[error("unknown check id '{0}'")]
    UnknownCheckId(String),
    #[error("report schema mismatch: {0} vs {1}")]
    SchemaMismatch(String, String),
    #[error("missing profile: {0}")]
    MissingProfile(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
