use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("the failed set is empty")]
    EmptyFailureSet,
    #[error("the failed set contains every state")]
    FailureSetIsAllStates,
    #[error("state `{0}` has no admissible actions")]
    EmptyActionSet(String),
    #[error("row ({state}, {action}) sums to {sum}, not 1")]
    BadRowSum {
        state: String,
        action: String,
        sum: String,
    },
    #[error("negative probability p({target} | {state}, {action})")]
    NegativeProbability {
        state: String,
        action: String,
        target: String,
    },
    #[error("unknown state or action: {0}")]
    UnknownStateOrAction(String),
    #[error("no transition row for admissible pair ({state}, {action})")]
    MissingRow { state: String, action: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid name `{0}`: names must be nonempty and must not contain `|`")]
    InvalidName(String),
    #[error("cannot parse probability `{0}`")]
    BadProbability(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("policy space size overflows the platform integer range")]
    Overflow,

    #[error("policy, analysis or model were built from different models")]
    ModelMismatch,
    #[error("{count} policies exceed the enumeration cap of {cap}")]
    TooManyPolicies { count: String, cap: usize },

    #[error("policy is not in the restricted class: state `{0}` leaves the largest absorbing set")]
    PolicyOutsideClass(String),
    #[error("G* is empty; use the degenerate path")]
    EmptyGStar,
    #[error("singular system: pivot {pivot} at column {column}")]
    SingularSystem { column: usize, pivot: f64 },
    #[error("linear solve residual {residual} exceeds {tol}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("solution component {index} = {value} lies outside [0, 1]")]
    OutOfRangeSolution { index: usize, value: f64 },
    #[error("solved values cover {got} states but G* has {expected}")]
    CoverageMismatch { expected: usize, got: usize },
    #[error("iteration did not converge within {iters} iterations (last gap {gap})")]
    NotConverged { iters: usize, gap: f64 },

    #[error("policy iteration exceeded its budget of {0} improvement steps")]
    IterationBudgetExceeded(usize),
    #[error("improved optimality equation residual {residual} exceeds {tol}")]
    CertificateFailed { residual: f64, tol: f64 },

    #[error("no single policy is componentwise minimal: `{0}` and `{1}` disagree")]
    NoUniformMinimizer(String, String),
}

impl Error {
    /// Stable machine-readable identifier, used as the error `code` in CLI reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyFailureSet => "EmptyFailureSet",
            Error::FailureSetIsAllStates => "FailureSetIsAllStates",
            Error::EmptyActionSet(_) => "EmptyActionSet",
            Error::BadRowSum { .. } => "BadRowSum",
            Error::NegativeProbability { .. } => "NegativeProbability",
            Error::UnknownStateOrAction(_) => "UnknownStateOrAction",
            Error::MissingRow { .. } => "MissingRow",
            Error::DuplicateName(_) => "DuplicateName",
            Error::InvalidName(_) => "InvalidName",
            Error::BadProbability(_) => "BadProbability",
            Error::InvalidPolicy(_) => "InvalidPolicy",
            Error::Overflow => "Overflow",
            Error::ModelMismatch => "ModelMismatch",
            Error::TooManyPolicies { .. } => "TooManyPolicies",
            Error::PolicyOutsideClass(_) => "PolicyOutsideClass",
            Error::EmptyGStar => "EmptyGStar",
            Error::SingularSystem { .. } => "SingularSystem",
            Error::ResidualTooLarge { .. } => "ResidualTooLarge",
            Error::OutOfRangeSolution { .. } => "OutOfRangeSolution",
            Error::CoverageMismatch { .. } => "CoverageMismatch",
            Error::NotConverged { .. } => "NotConverged",
            Error::IterationBudgetExceeded(_) => "IterationBudgetExceeded",
            Error::CertificateFailed { .. } => "CertificateFailed",
            Error::NoUniformMinimizer(..) => "NoUniformMinimizer",
        }
    }
}
