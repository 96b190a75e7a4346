use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    NotPrime(u32),
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("field order {p}^{m} is outside the supported range [2, 65536]")]
    FieldOrder { p: u32, m: u32 },
    #[error("value {value} is not an element of GF({q})")]
    ElementOutOfRange { value: u32, q: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("degenerate elementary operation: {0}")]
    DegenerateOp(String),
    #[error("row index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field mismatch: expected GF({expected}), got GF({got})")]
    FieldMismatch { expected: u32, got: u32 },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("group key out of range for n={n}, q={q}")]
    KeyOutOfRange { n: usize, q: u32 },

    #[error("singular at pivot column {column}")]
    Singular { column: usize },
    #[error("stripe width {width} out of range [1, {n}]")]
    StripeWidth { width: usize, n: usize },
    #[error("reduction word does not reduce the matrix (first divergence: {first_divergence:?})")]
    Verification { first_divergence: Option<usize> },
    #[error("word is not in swap-prefix form: swap at position {position} follows a non-swap")]
    SwapsNotPrefix { position: usize },

    #[error("state cap exceeded: GL({n},{q}) needs about {required} states, cap is {cap}")]
    StateCap {
        n: usize,
        q: u32,
        required: String,
        cap: u64,
    },
    #[error("matrix is not invertible")]
    NotInvertible,
    #[error("no distance table for GL({n},{q})")]
    NoDistanceTable { n: usize, q: u32 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    Alpha(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
