use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vibrational level {nu} exceeds the supported maximum {nu_max}")]
    LevelOutOfRange { nu: u8, nu_max: u8 },

    #[error("atom count mismatch: initial well holds {initial}, final well holds {final_}")]
    AtomCountMismatch { initial: usize, final_: usize },

    #[error("well holds {len} atoms, above the cap of {cap}")]
    WellOverfull { len: usize, cap: usize },

    #[error("fermionic well would hold two atoms in the same state")]
    PauliViolation,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("lattice grid radius {given} sites is too small, need at least {required} sites")]
    GridTooSmall { given: usize, required: usize },

    #[error("time grid is empty")]
    EmptyGrid,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
