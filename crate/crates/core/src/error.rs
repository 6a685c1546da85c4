use thiserror::Error;

pub type Result<T> = std::result::Result<T, CdtError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CdtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Legendre function `{label}`: {reason}")]
    InvalidFunction { label: String, reason: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// An argument left the effective domain of `V_k` (or of `V_k*`).
    #[error("domain exit at index {index}: {what} = {value} not in {domain}")]
    DomainExit {
        index: usize,
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("F is not in the range of G (residual {residual:.3e})")]
    NotInTcol { residual: f64 },

    #[error("dual gradient undefined: {0}")]
    UndefinedGradient(String),

    #[error("check not applicable: {0}")]
    NotApplicable(String),

    #[error("active-set guard exceeded: 2^{m} branches (limit 4096)")]
    GuardExceeded { m: usize },

    #[error("oracle limited to n<=2 (got n={n})")]
    OracleDimension { n: usize },

    #[error("no feasible node on the grid")]
    InfeasibleOnGrid,

    #[error("unknown audit `{0}`")]
    UnknownAudit(String),
}
