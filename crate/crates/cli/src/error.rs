use mdc_core::MdcError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] MdcError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("verification failed: {0} check(s) did not pass")]
    VerificationFailed(usize),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const BUDGET: i32 = 3;
    pub const CALIBRATION: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => exit::CONFIG,
            CliError::Core(MdcError::BudgetExceeded { .. }) => exit::BUDGET,
            CliError::Core(MdcError::Calibration(_)) => exit::CALIBRATION,
            CliError::Core(MdcError::InvalidArgument(_) | MdcError::DimensionMismatch { .. }) => exit::CONFIG,
            CliError::Core(MdcError::Invariant(_)) | CliError::VerificationFailed(_) => exit::VERIFY,
        }
    }
}
