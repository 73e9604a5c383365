//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid dimension {0}: vectors of R^(n+1,1) need n >= 3")]
    InvalidDimension(usize),

    #[error("degenerate input: pivot {pivot:.3e} below tolerance {tolerance:.3e}")]
    Degenerate { pivot: f64, tolerance: f64 },

    #[error("division by a jet whose leading value {0:.3e} is too small")]
    DivisionBySmall(f64),

    #[error("square root of a jet with non-positive leading value {0}")]
    SqrtDomain(String),

    #[error("pow domain violation: leading value {value} with exponent {exponent}")]
    PowDomain { value: String, exponent: f64 },

    #[error("derivative of an order-0 jet")]
    OrderZero,

    #[error("insufficient stencil: half-width {available} available, {required} required")]
    InsufficientStencil { required: usize, available: usize },

    #[error("unknown surface '{0}'")]
    UnknownSurface(String),

    #[error("surface spec parse error: {0}")]
    Parse(String),

    #[error("parameter {name}={value} out of range ({range})")]
    ParameterRange {
        name: String,
        value: f64,
        range: String,
    },

    #[error("point pushed through infinity: time component {0:.3e} <= 0")]
    ThroughInfinity(f64),

    #[error("coordinate change is singular at the evaluation point (|w_z| = {0:.3e})")]
    SingularCoordinateChange(f64),

    #[error("chart is not conformal at ({u}, {v}): |<Y_z,Y_z>| = {defect:.3e}")]
    NonConformal { u: f64, v: f64, defect: f64 },

    #[error("degenerate metric at ({u}, {v}): <Y_z,Y_zbar> = {metric:.3e}")]
    DegenerateMetric { u: f64, v: f64, metric: f64 },

    #[error("section is not normal: max pairing with V is {0:.3e}")]
    NotNormal(f64),

    #[error("Schwarzian is not constant: first-order coefficients of size {0:.3e}")]
    NonConstantSchwarzian(f64),

    #[error("Schwarzian is not holomorphic: |d_zbar s| = {0:.3e}")]
    NonHolomorphicSchwarzian(f64),

    #[error("Riccati solution blew up near z = {re}{im:+}i (|mu| = {modulus:.3e})")]
    RiccatiBlowUp { re: f64, im: f64, modulus: f64 },

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("frame is degenerate: defect {0:.3e}")]
    FrameDegenerate(f64),

    #[error("frame discontinuity between grid points ({0}, {1}): jump {2:.3e}")]
    FrameDiscontinuity(usize, usize, f64),

    #[error("grid too small: {0}x{1} (need at least 5 points per direction)")]
    GridTooSmall(usize, usize),

    #[error("|lambda| = {0} is not 1")]
    LambdaNotUnit(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Whether this error stems from user input rather than the mathematics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownSurface(_)
                | Error::Parse(_)
                | Error::ParameterRange { .. }
                | Error::GridTooSmall(..)
                | Error::LambdaNotUnit(_)
                | Error::InvalidDimension(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
