use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown symbol {symbol:?} at position {position}")]
    UnknownSymbol { symbol: char, position: usize },

    #[error("elements live on different backends")]
    BackendMismatch,

    #[error("invalid backend: {0}")]
    InvalidBackend(String),

    #[error("{what}: enumeration needs {required} elements but the budget is {limit}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        limit: u64,
    },

    #[error("the word is the identity of G*<x>")]
    TrivialWord,

    #[error("segment {index} does not start where segment {prev} ends", prev = .index.wrapping_sub(1))]
    EndpointMismatch { index: usize },

    #[error("periodic pattern has odd period {0}; x-translates must sit at even indices")]
    OddPeriod(usize),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure is not admissible (support must be symmetric and generate the group); pass an explicit override to proceed")]
    NotAdmissible,

    #[error("no constant in the grid dominates the empirical survival function")]
    NoDominatingConstant,

    #[error("no success after {attempts} attempts (walk length {walk_length}); the length constant is probably miscalibrated")]
    AttemptLimitExceeded { attempts: u64, walk_length: usize },

    #[error("injectivity failure: {left} and {right} both map to {image}")]
    InjectivityFailure { left: String, right: String, image: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}
