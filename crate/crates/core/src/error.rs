use thiserror::Error;

/// Every failure the library can report.
///
/// Variants that concern a particular state carry its label so messages are
/// actionable from the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NonSquare { rows: usize, row: usize, cols: usize },
    #[error("label count {labels} does not match dimension {dim}")]
    LabelMismatch { labels: usize, dim: usize },
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error("non-finite rate in row of state `{0}`")]
    NonFinite(String),
    #[error("positive diagonal entry at state `{0}`")]
    PositiveDiagonal(String),
    #[error("negative off-diagonal rate from `{from}` to `{to}`")]
    NegativeOffDiagonal { from: String, to: String },
    #[error("row sum of state `{state}` is positive ({sum:e})")]
    RowSumPositive { state: String, sum: f64 },
    #[error("singular system (reciprocal condition {rcond:e})")]
    SingularSystem { rcond: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("empty subset")]
    EmptySubset,
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("state index {0} out of range")]
    BadIndex(usize),
    #[error("time-change factor at `{0}` is not positive and finite")]
    NonPositiveLambda(String),
    #[error("harmonic function at `{0}` is not positive")]
    NonPositiveH(String),
    #[error("vector length {got} does not match state count {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("negative or non-finite weight at `{0}`")]
    NegativeWeight(String),
    #[error("zero denominator: no excursion from `{from}` to `{to}`")]
    ZeroDenominator { from: String, to: String },
    #[error("chi must vanish on F, but chi(`{0}`) > 0")]
    ChiOnF(String),
    #[error("cross-check `{what}` disagrees by {diff:e} (tolerance {tol:e})")]
    DisagreementBeyondTolerance { what: String, diff: f64, tol: f64 },
    #[error("degenerate loop: {0}")]
    DegenerateLoop(String),
    #[error("empty point tuple")]
    EmptyTuple,
    #[error("generator is not transient")]
    RequiresTransient,
    #[error("tuple of length {0} exceeds the enumeration limit of 10")]
    TupleTooLarge(usize),
    #[error("z outside the domain: Re(z) = {re} >= 1/rho = {bound}")]
    OutOfDomain { re: f64, bound: f64 },
    #[error("indices must be positive")]
    NonPositiveIndex,
    #[error("generator is not transient (spectral radius of Q = {0})")]
    NotTransient(f64),
    #[error("loop-length truncation infeasible: {0}")]
    TruncationInfeasible(String),
    #[error("matrix of size {0} exceeds the permanent limit of 10")]
    MatrixTooLarge(usize),
    #[error("density argument must be positive")]
    NonPositiveRho,
    #[error("series remainder {remainder:e} exceeds tolerance {tol:e}")]
    TruncationTooSmall { remainder: f64, tol: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("path is not self-avoiding")]
    NotSelfAvoiding,
    #[error("not a spanning tree: {0}")]
    NotASpanningTree(String),
    #[error("absorption is unreachable from `{0}`")]
    Unreachable(String),
    #[error("conditioning event has probability {0:e}")]
    DegenerateConditioning(f64),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("unknown suite `{0}`")]
    SuiteUnknown(String),
}

pub type Result<T> = std::result::Result<T, Error>;
