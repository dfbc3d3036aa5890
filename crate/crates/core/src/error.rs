use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("weights sum to {total}, not 1")]
    NotNormalized { total: f64 },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("distribution is not a joint over two spaces: {0}")]
    NotAJoint(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("space `{0}` has no points")]
    EmptySpace(String),

    #[error("space `{space}` repeats label `{label}`")]
    DuplicateLabel { space: String, label: String },

    #[error("column {column} sums to {total}, kernel is not Markov")]
    NotStochastic { column: usize, total: f64 },

    #[error("superposition puts two measures on `{0}`")]
    IllDefinedSuperposition(String),

    #[error("unknown role `{0}`: kernels may only read and write X and Y")]
    UnknownRole(String),

    #[error("infeasible factorization: {0}")]
    InfeasibleFactorization(String),

    #[error("{count} hypotheses exceed the cap of {cap}")]
    CapExceeded { count: u128, cap: usize },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("no factorized route for {0}")]
    DecompositionUnavailable(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("zero denominator in row {0}")]
    ZeroDenominator(usize),

    #[error("weights integrate to {total} under the base distribution, not 1")]
    NotADensity { total: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}
