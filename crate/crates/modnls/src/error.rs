use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("physical array length {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("time {t} outside modulation domain [0, {t_max}]")]
    OutOfDomain { t: f64, t_max: f64 },

    #[error("nonfinite field values at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },

    #[error("reference solution failed refinement consistency check: {0}")]
    ReferenceInconsistent(String),

    #[error("{excluded} of {total} sequences excluded by blow-up (more than 10%)")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("slope fit needs at least 3 positive (tau, error) pairs, got {0}")]
    InsufficientData(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BlowUp { .. }
            | Error::ReferenceInconsistent(_)
            | Error::TooManyExclusions { .. } => 2,
            _ => 1,
        }
    }
}
