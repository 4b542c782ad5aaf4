use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid flux {p}/{q}: {reason}")]
    InvalidFlux { p: i64, q: i64, reason: &'static str },

    #[error("{p} has no inverse modulo {q}")]
    NotCoprime { p: i64, q: i64 },

    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("operation requires phi_d = +-pi/2, got {0}")]
    PhiDNotQuarterTurn(f64),

    #[error("operation requires isotropic hopping t1 = t2 = t3 = 1")]
    Anisotropic,

    #[error("band intervals overlap by {overlap:e} between bands {lower} and {upper}")]
    BandOverlap { lower: usize, upper: usize, overlap: f64 },

    #[error("characteristic polynomial varies with k (relative deviation {0:e})")]
    ChambersViolation(f64),

    #[error("band {band} is degenerate at k = ({k1}, {k2}) (local gap {gap:e})")]
    Degenerate { band: usize, k1: f64, k2: f64, gap: f64 },

    #[error("gap {j} is closed (width {width:e})")]
    GapClosed { j: usize, width: f64 },

    #[error("index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("Chern integration did not converge up to grid {grid} (residual {residual})")]
    NotConverged { grid: usize, residual: f64 },

    #[error("projector jump {jump} exceeds 0.5 with {steps} steps per edge")]
    TransportStep { steps: usize, jump: f64 },

    #[error("invalid window [{lo}, {hi}] mod {q}: {reason}")]
    InvalidWindow { lo: i64, hi: i64, q: i64, reason: &'static str },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
