use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) has {2} incident faces, expected 2")]
    NonManifoldEdge(usize, usize, usize),
    #[error("vertex {0} does not have a single closed fan of faces")]
    NonManifoldVertex(usize),
    #[error("inconsistent orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("face {0} is degenerate")]
    DegenerateFace(usize),
    #[error("face {face} references vertex {index}, mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },
    #[error("mesh has no vertices or no faces")]
    EmptyMesh,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gradient of the level set vanishes at ({0}, {1}, {2})")]
    SingularGradient(f64, f64, f64),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("nodal vector at vertex {0} vanishes and cannot be normalized")]
    ZeroNodalVector(usize),
    #[error("convergence table needs positive errors, got {0}")]
    NonPositiveError(f64),
    #[error("division by a vanishing norm ({0:e})")]
    DivisionByZero(f64),
    #[error("invalid bracket [{0}, {1}]")]
    InvalidBracket(f64, f64),
    #[error("could not place new vertex on edge ({0}, {1}): {2}")]
    PlacementFailure(usize, usize, String),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } => 3,
            Error::NoConvergence { .. }
            | Error::ZeroNodalVector(_)
            | Error::SingularGradient(..)
            | Error::DivisionByZero(_)
            | Error::PlacementFailure(..) => 4,
            _ => 2,
        }
    }
}
