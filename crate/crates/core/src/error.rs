//! Error type shared by every analysis routine.

use thiserror::Error;

/// Which zone of the plane a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// Half-plane `x > 0`.
    Plus,
    /// Half-plane `x < 0`.
    Minus,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Plus => f.write_str("plus"),
            Side::Minus => f.write_str("minus"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in field `{0}`")]
    NonFinite(String),
    #[error("linear part of the {0} zone is singular")]
    DegenerateLinearPart(Side),
    #[error("linear part of the {0} zone is not trace-free (trace {1:e})")]
    NotTraceFree(Side, f64),
    #[error("minus zone is not a center (discriminant {0:e} >= 0)")]
    NonCenterMinus(f64),
    #[error("change of variables cannot keep the switching line fixed (m12 of minus zone vanishes)")]
    SwitchingLineNotPreserved,
    #[error("fold points of the two zones do not coincide at order zero (gap {0:e})")]
    FoldsMisaligned(f64),
    #[error("quantity `{name}` = {value:e} lies inside the sign-test margin")]
    BoundaryCase { name: String, value: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("amplitude must be positive, got {0:e}")]
    NonPositiveAmplitude(f64),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("sliding vector field denominator vanishes at y = {0:e}")]
    DenominatorVanishes(f64),
    #[error("point y = {0:e} is not in a sliding or escaping region")]
    NotSlidingRegion(f64),
    #[error("both zone fields are tangent to the switching line at y = {0:e}")]
    DoubleTangency(f64),
    #[error("both fields vanish identically on the switching line (line of tangency)")]
    LineOfTangency,
    #[error("no return to the switching line within the time budget")]
    NoReturn,
    #[error("orbit left the expected region: {0}")]
    UnexpectedRegion(String),
    #[error("simulation exceeded {0} segments")]
    MaxSegments(usize),
    #[error("event location stalled at t = {0:e}")]
    EventStall(f64),
    #[error("derivative of order {0} unavailable for family member {1}")]
    DerivativeUnavailable(usize, usize),
    #[error("angular velocity vanishes at theta = {0:e}")]
    ThetaDotVanishes(f64),
    #[error("integrator failed: {0}")]
    Integrator(String),
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
