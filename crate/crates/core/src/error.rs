use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at grid index {0}")]
    NonFinite(usize),

    #[error("component count mismatch: {left} vs {right}")]
    ComponentMismatch { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("requested {requested} components but the empirical covariance has rank {rank}")]
    RankExceeded { requested: usize, rank: usize },

    #[error("degenerate covariance at component {0}")]
    DegenerateCovariance(usize),

    #[error("unsupported fractional design 2^({d}-{p}); supported (d,p) pairs: {supported}")]
    UnsupportedFraction { d: usize, p: usize, supported: String },

    #[error("BBD undefined for d=2")]
    BoxBehnkenTwoFactors,

    #[error("no positive design points")]
    NoPositivePoints,

    #[error("rank-deficient design matrix at column `{0}`")]
    RankDeficient(String),

    #[error("ill-conditioned normal equations (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("singular matrix")]
    Singular,

    #[error("not enough observations: n = {n}, m = {m}")]
    TooFewObservations { n: usize, m: usize },

    #[error("zero direction")]
    ZeroDirection,

    #[error("empty sample")]
    EmptySample,

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
