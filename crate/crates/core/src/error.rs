use thiserror::Error;

/// Errors raised anywhere in the data pipeline or the estimation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{file}: {message}")]
    Input { file: String, message: String },

    #[error("{file}:{line}: {message}")]
    Row {
        file: String,
        line: u64,
        message: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("undefined log-odds for proportion {0}")]
    UndefinedOdds(f64),

    #[error("empty cell: {0}")]
    EmptyCell(String),

    #[error("missing capacity for city {0}")]
    MissingCapacity(String),

    #[error("cancelled flight {0} has no delay")]
    CancelledFlight(String),

    #[error("shares sum to {0}, expected 1")]
    SharesNotNormalized(f64),

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank deficient design: columns [{}] are linearly dependent on earlier columns", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("order condition fails: {instruments} instruments for {parameters} parameters")]
    OrderCondition { instruments: usize, parameters: usize },

    #[error("moment covariance is numerically singular (min/max eigenvalue ratio {ratio:e}); reduce the bandwidth or the instrument count")]
    SingularMomentCovariance { ratio: f64 },

    #[error("LIML eigenvalue {0} below the lower bound 1")]
    KappaBelowOne(f64),

    #[error("non-positive residual degrees of freedom ({0})")]
    DegreesOfFreedom(i64),

    #[error("negative J statistic {0}; moment scaling is inconsistent")]
    NegativeJ(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
