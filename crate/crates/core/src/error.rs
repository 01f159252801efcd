use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("unknown cluster name `{0}` (expected 16, 20, 32 or explicit spanning vectors)")]
    UnknownCluster(String),

    #[error("invalid momentum: {0}")]
    InvalidMomentum(String),

    #[error("momentum {momentum} is not allowed on the {n_sites}-site cluster")]
    MomentumNotAllowed { momentum: String, n_sites: usize },

    #[error("invalid Sz sector: 2*Sz = {twice_sz} on {n_sites} sites")]
    InvalidSz { twice_sz: i64, n_sites: usize },

    #[error("configuration {config:#x} has {found} up spins, sector requires {expected}")]
    WrongSector { config: u64, found: u32, expected: u32 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error(
        "eigensolver did not converge after {matvecs} operator applications \
         ({converged}/{requested} pairs converged, worst residual {worst_residual:.3e})"
    )]
    NoConvergence {
        matvecs: usize,
        converged: usize,
        requested: usize,
        worst_residual: f64,
    },

    #[error("invalid dimer pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid sweep specification: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
