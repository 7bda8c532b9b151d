use thiserror::Error;

/// Errors raised by fitting, estimation and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElmError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error(
        "hidden layer matrix is rank deficient (smallest/largest singular value = {ratio:.3e}); \
         use a Tikhonov factor alpha > 0"
    )]
    RankDeficient { ratio: f64 },

    #[error("not enough degrees of freedom: {0}")]
    DegreesOfFreedom(String),

    #[error("leverage of training point {index} is {leverage}, too close to 1 for the jackknife covariance")]
    Leverage { index: usize, leverage: f64 },

    #[error("empty grid")]
    EmptyGrid,
}

impl ElmError {
    /// True for failures that come from the numbers themselves rather than from
    /// malformed input (used to map CLI exit codes).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            ElmError::NonFinite(_)
                | ElmError::SvdNonConvergence
                | ElmError::NotPositiveDefinite
                | ElmError::RankDeficient { .. }
                | ElmError::DegreesOfFreedom(_)
                | ElmError::Leverage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, ElmError>;
