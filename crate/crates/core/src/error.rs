use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A spline parameter outside `[0, 1]`.
    Domain { value: f64 },
    /// Malformed input: knot vectors, weights, materials, sizes.
    Validation(String),
    /// Topology problems: non-conforming interfaces, unmatched edges, singular trace mass.
    Structural(String),
    /// Non-positive Jacobian determinant met during assembly.
    SingularJacobian { patch: usize, element: (usize, usize), det: f64 },
    DimensionMismatch { expected: usize, found: usize },
    /// The linear solver refused the matrix (zero or negative diagonal).
    Precondition(String),
    /// THD requested for a spectrum whose fundamental vanishes.
    UndefinedThd,
    /// The rotor/stator iteration failed at a rotor position of an EMF sweep.
    PositionNotConverged { position: usize, iterations: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { value } => write!(f, "parameter {value} outside [0, 1]"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Structural(msg) => write!(f, "structural error: {msg}"),
            Error::SingularJacobian { patch, element, det } => write!(
                f,
                "singular Jacobian (det = {det:e}) in patch {patch}, element ({}, {})",
                element.0, element.1
            ),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Precondition(msg) => write!(f, "solver precondition failed: {msg}"),
            Error::UndefinedThd => write!(f, "THD undefined: fundamental is zero"),
            Error::PositionNotConverged { position, iterations } => write!(
                f,
                "coupling did not converge at rotor position {position} after {iterations} iterations"
            ),
        }
    }
}

impl core::error::Error for Error {}
