use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("MalformedGerm: {0}")]
    MalformedGerm(String),
    #[error("TruncationInsufficient: {0}")]
    TruncationInsufficient(String),
    #[error("NotASublattice: generator {0} is not in the integer span of H")]
    NotASublattice(String),
    #[error("NonUnimodular: determinant {0}")]
    NonUnimodular(i64),
    #[error("InvalidCenterForm: {0}")]
    InvalidCenterForm(String),
    #[error("StepBudgetExceeded: {0} steps")]
    StepBudgetExceeded(usize),
    #[error("NotAFace: {0}")]
    NotAFace(String),
    #[error("NotACone: {0}")]
    NotACone(String),
    #[error("InvalidPreRelation: {0}")]
    InvalidPreRelation(String),
    #[error("InvalidState: {0}")]
    InvalidState(String),
    #[error("ParseError: {0}")]
    Parse(String),
}

impl Error {
    /// Short variant name, used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MalformedGerm(_) => "MalformedGerm",
            Error::TruncationInsufficient(_) => "TruncationInsufficient",
            Error::NotASublattice(_) => "NotASublattice",
            Error::NonUnimodular(_) => "NonUnimodular",
            Error::InvalidCenterForm(_) => "InvalidCenterForm",
            Error::StepBudgetExceeded(_) => "StepBudgetExceeded",
            Error::NotAFace(_) => "NotAFace",
            Error::NotACone(_) => "NotACone",
            Error::InvalidPreRelation(_) => "InvalidPreRelation",
            Error::InvalidState(_) => "InvalidState",
            Error::Parse(_) => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
