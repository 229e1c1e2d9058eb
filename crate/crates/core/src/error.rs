use thiserror::Error;

/// Errors produced by the numerics library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input matrix not full rank (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    #[error("not an annihilator: |B_perp * B| = {residual:e}")]
    NotAnnihilator { residual: f64 },

    #[error("input matrix is not left semi-orthogonal: |B^T B - I| = {residual:e}")]
    NotSemiOrthogonal { residual: f64 },

    #[error("non-finite input")]
    NonFiniteInput,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("constraint not regular here (decoupling scalar {value:e})")]
    NotRegular { value: f64 },

    #[error("stiffness or singularity encountered at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("not in {chart} chart")]
    OutOfChart { chart: &'static str },

    #[error("quadrature did not converge: estimate {estimate} with error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("insufficient crossings: need at least {needed}, found {found}")]
    InsufficientCrossings { needed: usize, found: usize },

    #[error("return map did not close: {0}")]
    ReturnMap(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and strictly positive, got {value}"),
        })
    }
}
