use thiserror::Error;

/// Errors raised by the numerical kernel and the physics layers built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no convergence: {0}")]
    Convergence(String),

    #[error("step size underflow at t = {t} (h = {h:e}); system may be stiff")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unphysical rates: {0}")]
    UnphysicalRates(String),

    #[error("two-level reduction invalid: {0}")]
    MultiTransition(String),

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("reservoir is not squeezed (M = {m} <= N = {n})")]
    NotSqueezed { n: f64, m: f64 },

    #[error("non-positive radiative rate: measured T = {measured} us, T_phi = {t_phi} us")]
    NonPositiveRate { measured: f64, t_phi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
