use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// a_z + q_z²/2 < 0
    #[error("unstable trap: a_z + q_z^2/2 = {0:.6} < 0")]
    UnstableTrap(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pulse train sub-pulses overlap: pulse width {width:e} s exceeds spacing {spacing:e} s")]
    PulseOverlap { width: f64, spacing: f64 },

    #[error("integrator step underflow at t = {t:e} s (required step {step:e} s)")]
    StepUnderflow { t: f64, step: f64 },

    #[error("integrator failed to converge at t = {t:e} s after {steps} steps")]
    TooManySteps { t: f64, steps: usize },

    #[error("kick-ladder truncation: amplitude {amplitude:e} at |n| = {n_max}")]
    KickTruncation { amplitude: f64, n_max: usize },

    #[error("Fock cutoff inadequate: tail mass {tail:e} in the top levels of M = {m_max}")]
    FockTruncation { tail: f64, m_max: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this failure: 2 for configuration and validation
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnstableTrap(_)
            | Error::InvalidParameter(_)
            | Error::PulseOverlap { .. }
            | Error::Config(_) => 2,
            Error::StepUnderflow { .. }
            | Error::TooManySteps { .. }
            | Error::KickTruncation { .. }
            | Error::FockTruncation { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }

    pub fn is_numerical(&self) -> bool {
        self.exit_code() == 3
    }
}
