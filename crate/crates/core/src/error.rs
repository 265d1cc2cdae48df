use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variants are grouped by the subsystem that raises them; [`Error::code`]
/// gives each one a stable integer so foreign callers can branch on it.
#[derive(Debug, Error)]
pub enum Error {
    // domain types
    #[error("invalid answer domain: {0}")]
    InvalidDomain(String),
    #[error("label {label:?} is not part of the answer domain")]
    UnknownLabel { label: String },
    #[error("invalid question {question_id:?}: {reason}")]
    InvalidQuestion { question_id: String, reason: String },
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    // batching
    #[error("golden pool holds {available} questions but {required} are required")]
    InsufficientGoldens { required: usize, available: usize },
    #[error("{available} new questions available but {required} are required")]
    InsufficientQuestions { required: usize, available: usize },

    // prediction
    #[error("worker count must be odd and positive, got {0}")]
    EvenWorkerCount(usize),
    #[error("mean worker accuracy must exceed 0.5, got {0}")]
    MeanAccuracyNotAboveHalf(f64),
    #[error("required accuracy must lie strictly between 0 and 1, got {0}")]
    InvalidAccuracyTarget(f64),
    #[error("{required} workers exceed the cap of {cap}")]
    WorkerCapExceeded { required: usize, cap: usize },

    // verification
    #[error("answer domain size must be at least 2, got {0}")]
    DomainTooSmall(usize),
    #[error("no profile for worker {0:?}")]
    MissingProfile(String),
    #[error("observation has no votes")]
    EmptyObservation,
    #[error("observation holds {received} of {planned} votes")]
    IncompleteObservation { received: usize, planned: usize },

    // online
    #[error("session no longer accepts answers")]
    SessionClosed,
    #[error("worker {0:?} already answered this question")]
    DuplicateWorker(String),
    #[error("no votes received yet")]
    NoVotesYet,
    #[error("every planned vote has been received")]
    SessionExhausted,
    #[error("result stream is empty")]
    EmptyStream,

    // sampling
    #[error("HIT contains no golden questions")]
    NoGoldens,
    #[error("worker {worker_id:?} has no answer for golden question {question_id:?}")]
    MissingAnswer {
        worker_id: String,
        question_id: String,
    },
    #[error("estimate and reference cover different worker sets")]
    WorkerSetMismatch,
    #[error("golden tally {correct}/{total} is impossible")]
    InvalidTally { correct: u64, total: u64 },

    // simulator
    #[error("invalid accuracy distribution: {0}")]
    InvalidDistribution(String),
    #[error("pool of {available} workers cannot staff {required} slots")]
    PoolTooSmall { required: usize, available: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable numeric code, never 0 (0 means success across the C ABI).
    pub fn code(&self) -> i32 {
        match self {
            Error::InvalidDomain(_) => 10,
            Error::UnknownLabel { .. } => 11,
            Error::InvalidQuestion { .. } => 12,
            Error::InvalidObservation(_) => 13,
            Error::OutOfRange { .. } => 14,
            Error::InsufficientGoldens { .. } => 20,
            Error::InsufficientQuestions { .. } => 21,
            Error::EvenWorkerCount(_) => 30,
            Error::MeanAccuracyNotAboveHalf(_) => 31,
            Error::InvalidAccuracyTarget(_) => 32,
            Error::WorkerCapExceeded { .. } => 33,
            Error::DomainTooSmall(_) => 40,
            Error::MissingProfile(_) => 41,
            Error::EmptyObservation => 42,
            Error::IncompleteObservation { .. } => 43,
            Error::SessionClosed => 50,
            Error::DuplicateWorker(_) => 51,
            Error::NoVotesYet => 52,
            Error::SessionExhausted => 53,
            Error::EmptyStream => 54,
            Error::NoGoldens => 60,
            Error::MissingAnswer { .. } => 61,
            Error::WorkerSetMismatch => 62,
            Error::InvalidTally { .. } => 63,
            Error::InvalidDistribution(_) => 70,
            Error::PoolTooSmall { .. } => 71,
            Error::InvalidScenario(_) => 72,
            Error::Io(_) => 90,
            Error::Json(_) => 91,
            Error::Csv(_) => 92,
        }
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            range: "(0, 1)",
            value,
        })
    }
}
