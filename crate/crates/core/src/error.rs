use alloc::string::String;
use core::fmt;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Triplet or CSR index outside the declared shape.
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    /// Operand shapes do not conform.
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },
    /// No acceptable pivot in the given column of the factorization.
    SingularMatrix { column: usize, pivot: f64 },
    /// Geometry or mesh input rejected.
    InvalidGeometry(String),
    /// A configuration value is outside its admissible range.
    InvalidParameter(String),
    /// Quadrature order not in 1..=4.
    UnsupportedQuadrature(usize),
    /// Point is not inside any mesh triangle.
    PointOutsideMesh { x: f64, y: f64 },
    /// The flow saddle system lacks a constraint that fixes the pressure level.
    MissingPressureReference,
    /// Newton iteration did not reach the requested residual.
    NewtonDiverged { iterations: usize, residual: f64 },
    /// Flow solve failed at a particular pair of fan speeds.
    FlowFailed {
        fan_speed_1: f64,
        fan_speed_2: f64,
        source: alloc::boxed::Box<Error>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IndexOutOfBounds {
                row,
                col,
                nrows,
                ncols,
            } => write!(
                f,
                "entry ({row}, {col}) outside a {nrows}x{ncols} matrix"
            ),
            Error::DimensionMismatch {
                expected,
                found,
                context,
            } => write!(f, "{context}: expected length {expected}, found {found}"),
            Error::SingularMatrix { column, pivot } => {
                write!(f, "matrix is singular: pivot {pivot:e} in column {column}")
            }
            Error::InvalidGeometry(msg) => write!(f, "invalid geometry: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnsupportedQuadrature(order) => {
                write!(f, "no quadrature rule of order {order} (supported: 1..=4)")
            }
            Error::PointOutsideMesh { x, y } => write!(f, "point ({x}, {y}) is outside the mesh"),
            Error::MissingPressureReference => write!(
                f,
                "pressure is undetermined: no inlet segment (open boundary) and no pinned pressure dof"
            ),
            Error::NewtonDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::FlowFailed {
                fan_speed_1,
                fan_speed_2,
                source,
            } => write!(
                f,
                "flow solve failed at fan speeds ({fan_speed_1}, {fan_speed_2}) m/s: {source}"
            ),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::FlowFailed { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
