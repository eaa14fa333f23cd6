use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("near-degenerate spectrum at t = {time} (gap {gap:e} below tolerance {tolerance:e})")]
    Degeneracy { time: f64, gap: f64, tolerance: f64 },

    #[error("time grid too coarse at t = {time}: adjacent frame overlap {overlap:.4} for level {level}")]
    GridTooCoarse { time: f64, level: usize, overlap: f64 },

    #[error("super-adiabatic order {order} exceeds cap {max}")]
    OrderCap { order: usize, max: usize },

    #[error("time {time} outside frame grid [{start}, {end}]")]
    OutsideGrid { time: f64, start: f64, end: f64 },

    #[error("state integrity violated: {0}")]
    StateIntegrity(String),

    #[error("positivity violated at t = {time}: minimum eigenvalue {min_eigenvalue:e}")]
    PositivityViolation { time: f64, min_eigenvalue: f64 },

    #[error("step size underflow at t = {time} (step {step:e})")]
    StepUnderflow { time: f64, step: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the error's category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Validation(_) => 3,
            Error::ParameterDomain(_) | Error::Dimension(_) | Error::OrderCap { .. } => 4,
            Error::Degeneracy { .. }
            | Error::GridTooCoarse { .. }
            | Error::OutsideGrid { .. }
            | Error::StepUnderflow { .. } => 5,
            Error::StateIntegrity(_) | Error::PositivityViolation { .. } => 6,
            Error::Io(_) => 7,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::ParameterDomain(msg.into())
}
