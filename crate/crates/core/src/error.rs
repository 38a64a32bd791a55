use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid offspring law `{spec}`: {reason}")]
    InvalidLaw { spec: String, reason: String },

    #[error("query radius {radius} exceeds index cell size {cell_size}")]
    RadiusExceedsCell { radius: f64, cell_size: f64 },

    #[error("cells {a:?} and {b:?} are not adjacent")]
    NotAdjacent { a: (usize, usize), b: (usize, usize) },

    #[error("vertex {0} is forbidden")]
    Forbidden(usize),

    #[error("vertex {vertex} does not lie in the central box of cell {cell:?}")]
    NotInCentralBox { vertex: usize, cell: (usize, usize) },

    #[error("vertex {vertex} has out-degree {degree}, expected at most 1")]
    NotFunctional { vertex: usize, degree: usize },

    #[error("node {0:?} has not been tested")]
    UntestedNode((usize, usize)),

    #[error("bound not applicable: {0}")]
    BoundInapplicable(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed points dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
