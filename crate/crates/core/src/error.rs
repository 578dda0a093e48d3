use thiserror::Error;

/// Errors produced by the delay model, planner and simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeflError {
    #[error("invalid clock model: {0}")]
    InvalidClockModel(String),

    #[error("invalid batch size {0}: must be at least 1")]
    InvalidBatch(f64),

    #[error("invalid link: {0}")]
    InvalidLink(String),

    #[error("fleet has no devices")]
    EmptyFleet,

    #[error("invalid device: {0}")]
    InvalidDevice(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Eq. for rounds-to-converge blows up when local accuracy gives no progress.
    #[error("communication rounds diverge: {0}")]
    Divergent(String),

    #[error("empty search grid: {0}")]
    EmptyGrid(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty dataset on device {0}")]
    EmptyDataset(usize),

    #[error("simulation diverged in round {round} on device {device}")]
    Diverged { round: usize, device: usize },

    #[error("unsupported task: {0}")]
    UnsupportedTask(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl DeflError {
    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            DeflError::Io(_) => 1,
            DeflError::Config(_) => 2,
            DeflError::Diverged { .. } => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for DeflError {
    fn from(e: std::io::Error) -> Self {
        DeflError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DeflError>;

pub(crate) fn ensure(cond: bool, err: impl FnOnce() -> DeflError) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}
