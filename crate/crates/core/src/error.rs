use thiserror::Error;

use crate::codec::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains a non-finite coordinate")]
    NonFinite,

    #[error("generator matrix is singular or malformed: {0}")]
    BadGenerator(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("lattices are not nested: {0}")]
    NotNested(String),

    #[error("point is not in the lattice: {0}")]
    NotInLattice(String),

    #[error("enumeration window too small: expected {expected} points, found {found}")]
    WindowTooSmall { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration rejected: {0}")]
    Rejected(ValidationReport),

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
