use alloc::string::String;

use crate::geometry::Point;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} is not inside the domain")]
    Exterior { point: Point },

    #[error("kernel evaluated at coincident points {point:?}")]
    CoincidentPoints { point: Point },

    /// Doubling the quadrature nodes moved the result by more than the tolerance.
    #[error("quadrature not converged: coarse {coarse}, refined {refined} (tolerance {tolerance})")]
    QuadratureUnstable {
        coarse: f64,
        refined: f64,
        tolerance: f64,
    },

    /// The nonlinearity was evaluated at a non-positive argument, i.e. the iterate
    /// left the admissible cone `u ≥ h₀`.
    #[error("admissible cone breached: f evaluated at {value} at {location:?}")]
    ConeBreach {
        value: f64,
        location: Option<Point>,
    },

    #[error("linear solve stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("fields are defined on different grids")]
    NonConformable,

    #[error("acceptance rate {rate:.3e} below floor {floor:.3e} after {attempts} attempts")]
    AcceptanceFloor { rate: f64, floor: f64, attempts: u64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
