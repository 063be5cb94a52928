//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A body or ring fails its construction invariants.
    InvalidBody(String),
    /// Inner boundary touches (or leaves) the outer body.
    ZeroSeparation,
    /// Operation requires the inner boundary to be a single point.
    NotAPoint,
    /// Grid spacing too coarse: interior empty or disconnected.
    TooCoarse(String),
    /// Sample point outside the hull of usable grid nodes.
    OutOfDomain { x: f64, y: f64 },
    /// No level crossing found for the requested level.
    EmptyLevel(f64),
    /// Iterative solver hit its sweep budget.
    NoConvergence { sweeps: usize, residual: f64 },
    /// Streamline seed outside the closed ring.
    SeedOutOfDomain { x: f64, y: f64 },
    /// Flux contour comes closer than the required clearance to a boundary.
    ContourTouchesBoundary,
    /// The two streamlines merge inside the inspected level band.
    StreamlinesMergedInBand,
    /// Check is only defined for non-stadium rings.
    IsAStadium,
    /// Inner segment does not sit on the high ridge of the outer body.
    GammaNotOnRidge(String),
    /// Check ran against a domain it is not specified for.
    WrongFixture(String),
    /// A field value is NaN or infinite where a finite number is required.
    NonFiniteField { index: usize },
    /// Malformed input file.
    Parse { context: String, msg: String },
    /// Unknown format version tag.
    VersionMismatch { found: String },
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidBody(msg) => write!(f, "invalid body: {msg}"),
            Error::ZeroSeparation => write!(f, "inner boundary has no clearance from the outer boundary"),
            Error::NotAPoint => write!(f, "inner boundary must be a single point"),
            Error::TooCoarse(msg) => write!(f, "grid too coarse: {msg}"),
            Error::OutOfDomain { x, y } => write!(f, "point ({x}, {y}) outside the sampled domain"),
            Error::EmptyLevel(c) => write!(f, "no level curve at level {c}"),
            Error::NoConvergence { sweeps, residual } => {
                write!(f, "no convergence after {sweeps} sweeps (residual {residual:.3e})")
            }
            Error::SeedOutOfDomain { x, y } => write!(f, "seed ({x}, {y}) outside the closed ring"),
            Error::ContourTouchesBoundary => write!(f, "contour violates the boundary clearance"),
            Error::StreamlinesMergedInBand => write!(f, "streamlines merge inside the level band"),
            Error::IsAStadium => write!(f, "ring is a stadium; check skipped"),
            Error::GammaNotOnRidge(msg) => write!(f, "inner segment not on the high ridge: {msg}"),
            Error::WrongFixture(msg) => write!(f, "wrong fixture: {msg}"),
            Error::NonFiniteField { index } => write!(f, "non-finite field value at node {index}"),
            Error::Parse { context, msg } => write!(f, "parse error ({context}): {msg}"),
            Error::VersionMismatch { found } => write!(f, "unsupported format version: {found}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
