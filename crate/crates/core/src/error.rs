use thiserror::Error;

use crate::units::{Dimension, Unit};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unit {unit:?} does not measure {dimension}")]
    DimensionMismatch { unit: Unit, dimension: Dimension },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported rotor quantum number J={0} (supported: 0..=3)")]
    UnsupportedJ(u32),

    #[error("radial integration failed for n={n}, l={l}: {reason}")]
    RadialIntegration { n: u32, l: u32, reason: String },

    #[error("radius {radius} a.u. lies outside the wavefunction grid [{lo}, {hi}]")]
    OutsideGrid { radius: f64, lo: f64, hi: f64 },

    #[error("ambiguous eigenstate label for {state}: best overlap {overlap:.4} <= 0.5")]
    AmbiguousLabel { state: String, overlap: f64 },

    #[error("dimension cap exceeded: N={n} molecules gives 2^{n} states (max N={max})")]
    DimensionCap { n: usize, max: usize },

    #[error("distribution {name} is not normalized (sum = {sum})")]
    NotNormalized { name: String, sum: f64 },

    #[error("selected branch has zero norm")]
    ZeroNorm,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RadialIntegration { .. }
            | Error::AmbiguousLabel { .. }
            | Error::ZeroNorm
            | Error::OutsideGrid { .. } => 3,
            _ => 2,
        }
    }
}
