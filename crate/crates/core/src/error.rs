use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state {0} is outside the flux domain [0, inf)")]
    Domain(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    /// Initial data violating nonnegativity / positive atom masses.
    #[error("invalid initial data: {0}")]
    InvalidInitial(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("time step {dt} exceeds the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("atom {0} is not alive")]
    DeadAtom(usize),

    #[error("verification precondition failed: {0}")]
    Precondition(String),

    /// Something that a monotone scheme must never produce.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
