use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument outside the domain of the function: {0}")]
    Domain(String),

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("deformation gradient must have positive determinant (det = {det:e})")]
    Orientation { det: f64 },

    #[error("distortion mode undefined for a pure dilation (K2 = {k2:e})")]
    DistortionUndefined { k2: f64 },

    #[error("energy value {value:e} exceeds the overflow guard")]
    Overflow { value: f64 },

    #[error("determinant changes sign along the probe at t = {t} (det = {det:e})")]
    Interval { t: f64, det: f64 },

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("non-finite evaluation: {0}")]
    NonFinite(String),

    #[error("finite-difference step underflowed")]
    StepUnderflow,

    #[error("energy is not stress free at the identity (value {value:e}, stress norm {stress:e})")]
    NotStressFree { value: f64, stress: f64 },

    #[error("parameter t = {t} lies outside the admissible interval ({lo}, {hi})")]
    OutsideInterval { t: f64, lo: f64, hi: f64 },
}
