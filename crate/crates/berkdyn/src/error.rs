use thiserror::Error;

/// Every failure the library can report. Variants carry enough context to be
/// rendered as machine-readable causes by the command-line front-end.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("root unavailable: residue characteristic divides the root index {0}")]
    RootUnavailable(u64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("invalid backend: {0}")]
    InvalidBackend(String),
    #[error("backend mismatch between operands")]
    BackendMismatch,
    #[error("invalid marks: {0}")]
    InvalidMarks(String),
    #[error("polynomial is not tame: local degree {degree} at {witness}")]
    NotTame { degree: u32, witness: String },
    #[error("operation undefined at a type I point")]
    TypeIPoint,
    #[error("point is not certified to lie in the basin of infinity")]
    NotInBasin,
    #[error("iteration budget of {0} exhausted")]
    BudgetExhausted(usize),
    #[error("point is not strictly outside the base disk")]
    NotOutsideBaseDisk,
    #[error("not comparable: {0}")]
    NotComparable(String),
    #[error("point is not on the tree: {0}")]
    NotOnTree(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("contraction failed at step {step}: {detail}")]
    ContractionFailed { step: usize, detail: String },
    #[error("maximum of {0} iterations exceeded")]
    MaxIterExceeded(usize),
    #[error("truncation order insufficient: {0}")]
    OrderInsufficient(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures caused by running out of iterations or precision,
    /// as opposed to malformed input.
    pub fn is_exhaustion(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted(_)
                | Error::BudgetExhausted(_)
                | Error::MaxIterExceeded(_)
                | Error::OrderInsufficient(_)
        )
    }

    /// Short stable identifier used in JSON error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DivisionByZero => "DivisionByZero",
            Error::PrecisionExhausted(_) => "PrecisionExhausted",
            Error::RootUnavailable(_) => "RootUnavailable",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::InvalidBackend(_) => "InvalidBackend",
            Error::BackendMismatch => "BackendMismatch",
            Error::InvalidMarks(_) => "InvalidMarks",
            Error::NotTame { .. } => "NotTame",
            Error::TypeIPoint => "TypeIPoint",
            Error::NotInBasin => "NotInBasin",
            Error::BudgetExhausted(_) => "BudgetExhausted",
            Error::NotOutsideBaseDisk => "NotOutsideBaseDisk",
            Error::NotComparable(_) => "NotComparable",
            Error::NotOnTree(_) => "NotOnTree",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::ContractionFailed { .. } => "ContractionFailed",
            Error::MaxIterExceeded(_) => "MaxIterExceeded",
            Error::OrderInsufficient(_) => "OrderInsufficient",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
