use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("columns are rank deficient (smallest/largest singular value = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("basis is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("basis column {column} does not sum to zero (|sum| = {sum:e})")]
    NotSumZero { column: usize, sum: f64 },

    #[error("net enumeration is limited to k <= 4 (got k = {k})")]
    NetTooLarge { k: usize },

    #[error("generator {index} is not unitary (max deviation {deviation:e})")]
    NonUnitary { index: usize, deviation: f64 },

    #[error("sign at index {index} has modulus {modulus}, expected 1")]
    NonUnitSign { index: usize, modulus: f64 },

    #[error("orbit exceeds {limit} points")]
    OrbitTooLarge { limit: usize },

    #[error("group exceeds {limit} elements")]
    GroupTooLarge { limit: usize },

    #[error("operation needs explicit generators, not the symbolic signed permutation group")]
    SymbolicGroup,

    #[error("malformed group description: {0}")]
    GroupJson(#[from] serde_json::Error),

    #[error("no subspace passed delocalization after {attempts} attempts (best sup T-norm {best:.4}, threshold {threshold})")]
    CertificationFailed {
        attempts: usize,
        best: f64,
        threshold: f64,
    },

    #[error("dyadic index set is empty (j_min = {j_min} > j_max = {j_max})")]
    EmptyJ { j_min: i64, j_max: i64 },

    #[error("subspaces are not mutually orthogonal (max cross-Gram entry {overlap:e})")]
    NonOrthogonal { overlap: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("guarantee missed: {0}")]
    GuaranteeMissed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by the caller's input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::EmptyVector
                | Error::NonFinite(_)
                | Error::InvalidArgument(_)
                | Error::RankDeficient { .. }
                | Error::NotOrthonormal { .. }
                | Error::NotSumZero { .. }
                | Error::NetTooLarge { .. }
                | Error::NonUnitary { .. }
                | Error::NonUnitSign { .. }
                | Error::OrbitTooLarge { .. }
                | Error::GroupTooLarge { .. }
                | Error::SymbolicGroup
                | Error::GroupJson(_)
                | Error::EmptyJ { .. }
                | Error::NonOrthogonal { .. }
                | Error::Config(_)
        )
    }

    pub fn is_guarantee_missed(&self) -> bool {
        matches!(
            self,
            Error::GuaranteeMissed(_) | Error::CertificationFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
