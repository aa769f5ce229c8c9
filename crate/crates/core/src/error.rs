use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the core numerics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(String),
    /// A field or vector does not match the mesh or operator dimension.
    SizeMismatch { expected: usize, found: usize },
    /// An iterative solve stopped before reaching its tolerance.
    SolverFailure {
        iterations: usize,
        residual: f64,
        target: f64,
    },
    /// The right-hand side of a pure Neumann problem has a nonzero net source,
    /// so no solution exists.
    IncompatibleRhs { net: f64, norm: f64 },
    /// An operation produced a NaN or infinity.
    NonFinite(&'static str),
    /// Cross-grid operations need both meshes to cover the same box.
    BboxMismatch,
    /// The operation needs a uniform rectangular grid.
    NotRectGrid,
    /// Coarse step count must divide the fine one.
    NonDividing { coarse: usize, fine: usize },
    /// A time step failed; carries the 1-based step index.
    StepFailed { step: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::SizeMismatch { expected, found } => {
                write!(f, "size mismatch: expected {expected}, found {found}")
            }
            Error::SolverFailure {
                iterations,
                residual,
                target,
            } => write!(
                f,
                "solver did not converge: after {iterations} iterations residual {residual:e} > target {target:e}"
            ),
            Error::IncompatibleRhs { net, norm } => write!(
                f,
                "incompatible right-hand side: net source {net:e} exceeds tolerance for norm {norm:e}"
            ),
            Error::NonFinite(what) => write!(f, "non-finite value produced in {what}"),
            Error::BboxMismatch => write!(f, "meshes cover different bounding boxes"),
            Error::NotRectGrid => write!(f, "operation requires a uniform rectangular grid"),
            Error::NonDividing { coarse, fine } => {
                write!(f, "coarse step count {coarse} does not divide fine count {fine}")
            }
            Error::StepFailed { step, source } => write!(f, "time step {step} failed: {source}"),
        }
    }
}

impl core::error::Error for Error {}
