use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("group mismatch: {0}")]
    GroupMismatch(String),
    #[error("coefficient mode mismatch (exact vs float)")]
    ModeMismatch,
    #[error("invalid group specification: {0}")]
    InvalidGroup(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("Neumann condition failed: best split has ||B||_1 = {norm}")]
    NeumannConditionFailed { norm: f64 },
    #[error("inverse residual {residual} exceeds bound {bound}")]
    InverseResidual { residual: f64, bound: f64 },
    #[error("sofic map too large: d = {d} exceeds maximum {max}")]
    DimensionOverflow { d: u128, max: usize },
    #[error("element {0} outside sofic support")]
    OutsideSupport(String),
    #[error("invalid sofic map: {0}")]
    InvalidSoficMap(String),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("freeness defect requires distinct elements")]
    SameElement,
    #[error("window exhausted: need radius {needed}, have {available}")]
    WindowExhausted { needed: usize, available: usize },
    #[error("action mismatch: {0}")]
    ActionMismatch(String),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("sofic approximation quality insufficient: {0}")]
    SigmaQuality(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("all quotient levels singular")]
    AllSingular,
}

pub type Result<T> = std::result::Result<T, Error>;
