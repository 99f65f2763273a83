use thiserror::Error;

/// Errors raised across the library.
///
/// The last three variants correspond to contradiction branches of the
/// connectivity argument; they are unreachable on valid input and signal
/// either a misclassified endpoint or a bug.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands live in different field contexts")]
    CtxMismatch,
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("reducible parameters: (q+1) = {q_plus_one} divides s = {s}")]
    ReducibleParameters { s: u64, q_plus_one: u64 },
    #[error("field too small: need 2n | m (n = {n}, m = {m})")]
    FieldTooSmall { n: usize, m: u32 },
    #[error("singular block {block}: {detail}")]
    SingularBlock { block: usize, detail: String },
    #[error("search budget exceeded after {explored} candidates")]
    SearchBudgetExceeded { explored: u64 },
    #[error("irreducibility violation: {0}")]
    IrreducibilityViolation(String),
    #[error("ordinary input detected: {0}")]
    OrdinaryInputDetected(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
