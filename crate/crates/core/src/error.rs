use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),

    #[error("unknown factor {0}")]
    UnknownFactor(String),

    #[error("factor label collision: {0}")]
    LabelCollision(String),

    #[error("wrong factor shape: {0}")]
    WrongFactorShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("too many undefined texture points ({fraction:.4} of the grid)")]
    TooManyUndefinedPoints { fraction: f64 },

    #[error("only {available} eigenvalues above threshold, {requested} requested")]
    InsufficientPositiveSpectrum { requested: usize, available: usize },

    #[error("modes are not orthonormal (max deviation {0:e})")]
    NonOrthogonalModes(f64),

    #[error("a relative phase cannot be combined with the conjugated two-photon form")]
    PhaseWithConjugation,

    #[error("state is not in coefficient-matrix form")]
    NotCoefficientForm,

    #[error("rank {rank} exceeds dimension {dim}")]
    RankExceedsDimension { rank: usize, dim: usize },

    #[error("edge_bins {edge_bins} too large for {m} modes")]
    EdgeBinsTooLarge { edge_bins: usize, m: usize },

    #[error("input columns are not orthonormal (max deviation {0:e})")]
    NonOrthonormalInput(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
