use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid price {close} on {date}")]
    InvalidPrice { date: NaiveDate, close: f64 },
    #[error("invalid window {0}: must be at least 2")]
    InvalidWindow(usize),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: score {score} outside [-4, 4]")]
    Range { line: u64, score: f64 },
    #[error("corpus contains no articles for the requested tickers")]
    EmptyCorpus,
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("degenerate denominator {0} in count-ratio sentiment")]
    DegenerateDenominator(f64),
    #[error("invalid weight {weight} for {key}")]
    InvalidWeight { key: String, weight: f64 },
    #[error("dates must be strictly increasing: {prev} then {next}")]
    Ordering { prev: NaiveDate, next: NaiveDate },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("cannot balance: level state {0} has zero probability")]
    CannotBalance(String),
    #[error("measure equivalence violated: {0}")]
    EquivalenceViolated(String),
    #[error("density is not normalized: E_P[Z] = {0}")]
    Unnormalized(f64),
    #[error("random variable undefined on state {0}")]
    Domain(String),
    #[error("training data must contain both classes")]
    DegenerateClasses,
    #[error("r-squared undefined: target has zero variance")]
    RSquaredUndefined,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
