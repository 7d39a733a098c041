use envforge::Error;
use thiserror::Error as ThisError;

/// Exit codes are part of the command-line contract.
pub mod exit {
    pub const OTHER: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const SINGULAR: u8 = 3;
    pub const BLOW_UP: u8 = 4;
    pub const FIT_UNRELIABLE: u8 = 5;
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Engine(#[from] Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot serialize output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Engine(e) => match e {
                Error::InvalidInput(_)
                | Error::UnsupportedSystem(_)
                | Error::IncommensurateSideband { .. }
                | Error::IncommensurateGrids { .. }
                | Error::GridMismatch(_) => exit::CONFIG,
                Error::DegenerateCarrier { .. }
                | Error::ResonantHarmonic
                | Error::SingularHarmonic { .. }
                | Error::ZeroHarmonicForcing(_) => exit::SINGULAR,
                Error::BlowUp { .. } => exit::BLOW_UP,
                Error::FitUnreliable { .. } => exit::FIT_UNRELIABLE,
                Error::Snapshot(_) | Error::Io(_) => exit::OTHER,
            },
            CliError::Output { .. } | CliError::Json(_) => exit::OTHER,
        }
    }
}
