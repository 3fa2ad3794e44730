use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant carries a stable kebab-case [`code`](Error::code) that the
/// command line front end and the JSON reports use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the Dirac kernel cannot be evaluated pointwise")]
    DiracNotPointwise,
    #[error("kernel of order {zeta} is singular at the origin")]
    SingularAtOrigin { zeta: f64 },
    #[error("convolution diverges at an endpoint (orders {a} and {b})")]
    DivergentConvolution { a: f64, b: f64 },
    #[error("order {order} is outside the admissible range {range}")]
    OrderOutOfRange { order: f64, range: &'static str },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("Re lambda_{index} = {re} does not exceed the declared abscissa {omega}")]
    OutsideDeclaredHalfplane { index: usize, re: f64, omega: f64 },
    #[error("circle of radius {radius} around coordinate {index} leaves the half-plane (limit {limit})")]
    RadiusTooLarge { index: usize, radius: f64, limit: f64 },
    #[error("no radius available for the Cauchy rule: declare a half-plane or pass a radius")]
    RadiusUnknown,
    #[error("derivative of order {order} is not supported by {method}")]
    OrderUnsupported { order: u32, method: &'static str },
    #[error("abscissa {abscissa} for coordinate {index} is not inside the half-plane Re > {omega}")]
    AbscissaOutsideHalfplane { index: usize, abscissa: f64, omega: f64 },
    #[error("extrapolation ladder must double at every rung: {0}")]
    LadderShape(String),
    #[error("increment at t = {t} exceeds the Lipschitz level: ratio {ratio} > {level}")]
    NotLipschitzAtLevel { t: f64, ratio: f64, level: f64 },
    #[error("no catalog entry named {0:?}")]
    NoSuchEntry(String),
    #[error("fixture {name:?} failed its smoke check: {reason}")]
    FixtureInconsistent { name: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DiracNotPointwise => "dirac-not-pointwise",
            Error::SingularAtOrigin { .. } => "singular-at-origin",
            Error::DivergentConvolution { .. } => "divergent-convolution",
            Error::OrderOutOfRange { .. } => "order-out-of-range",
            Error::DimMismatch { .. } => "dim-mismatch",
            Error::OutsideDeclaredHalfplane { .. } => "outside-declared-halfplane",
            Error::RadiusTooLarge { .. } => "radius-too-large",
            Error::RadiusUnknown => "radius-unknown",
            Error::OrderUnsupported { .. } => "order-unsupported",
            Error::AbscissaOutsideHalfplane { .. } => "abscissa-outside-halfplane",
            Error::LadderShape(_) => "ladder-shape",
            Error::NotLipschitzAtLevel { .. } => "not-lipschitz-at-level",
            Error::NoSuchEntry(_) => "no-such-entry",
            Error::FixtureInconsistent { .. } => "fixture-inconsistent",
            Error::InvalidInput(_) => "invalid-input",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}
