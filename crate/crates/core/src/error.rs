use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma has a pole at {0}")]
    Pole(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel is not p-Levy integrable: {0}")]
    NonIntegrable(String),

    #[error("grid function does not live on this mesh")]
    MeshMismatch,

    #[error("nondifferentiable point: tie at nodes {0} and {1} with p < 2 and no smoothing")]
    Nondifferentiable(usize, usize),

    #[error("incompatible Neumann data: defect {defect:.6e} exceeds tolerance {tol:.6e}")]
    IncompatibleData { defect: f64, tol: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
