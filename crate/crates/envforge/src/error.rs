use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate carrier at k = {k:?}: {reason}")]
    DegenerateCarrier { k: Vec<f64>, reason: String },

    #[error("harmonic n = 1 is resonant and cannot be inverted")]
    ResonantHarmonic,

    #[error("harmonic n = {n} is singular at k = {k:?} (|L_n| = {magnitude:e})")]
    SingularHarmonic { n: i32, k: Vec<f64>, magnitude: f64 },

    #[error("zero-harmonic forcing not supported: {0}")]
    ZeroHarmonicForcing(String),

    #[error("unsupported system: {0}")]
    UnsupportedSystem(String),

    #[error("sideband q = {q} is not a harmonic of 2*pi/{length}")]
    IncommensurateSideband { q: f64, length: f64 },

    #[error("incommensurate grids: envelope length {envelope_length}, direct length {direct_length} ({detail})")]
    IncommensurateGrids {
        envelope_length: f64,
        direct_length: f64,
        detail: String,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("blow-up at time {time} (max amplitude {max_amplitude:e})")]
    BlowUp { time: f64, max_amplitude: f64 },

    #[error("convergence fit unreliable: log-space residual {residual:e}")]
    FitUnreliable { residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
