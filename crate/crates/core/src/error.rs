use thiserror::Error;

#[derive(Debug, Error)]
pub enum QcaError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("expected a {expected}D lattice, got {found}D")]
    DimensionMismatch { expected: u8, found: u8 },

    #[error("mode {0:?} is not on the lattice grid")]
    OffGrid(Vec<i64>),

    #[error("degenerate momentum block at {0}: {1}")]
    DegenerateMode(String, &'static str),

    #[error("state dimension {found} does not match expected {expected}")]
    StateDimension { expected: usize, found: usize },

    #[error("configuration needs {requested} amplitudes, above the cap of {cap}")]
    CapExceeded { requested: u128, cap: u128 },

    #[error("state has amplitude outside the first-{0}-factors sector")]
    SupportViolation(usize),

    #[error("labels must be strictly increasing and distinct")]
    UnorderedLabels,

    #[error("{n} particles requested but only {n_max} tensor factors available")]
    TooManyParticles { n: usize, n_max: usize },

    #[error("label {0} is not part of this Fock basis")]
    UnknownLabel(String),

    #[error("invalid coin frame: {0}")]
    InvalidCoinFrame(String),

    #[error("matrix logarithm undefined: eigenphase at the branch cut")]
    BranchCut,

    #[error("{0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QcaError>;
