use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no steady state: requires lambda > 0 and lambda^2 + omega^2 - mu^2 > 0 (lambda = {lambda}, margin = {margin})")]
    NoSteadyState { lambda: f64, margin: f64 },

    #[error("degenerate drift spectrum (lambda = {lambda}, lambda^2 - gamma^2 = {gap}); closed form unavailable")]
    DegenerateSpectrum { lambda: f64, gap: f64 },

    #[error("covariance matrix is not positive definite (det = {det})")]
    NonPositiveDefinite { det: f64 },

    #[error("generating-function gauge violated: |F^2/4 - BD + H| = {residual} > tolerance {tolerance}")]
    GaugeViolation { residual: f64, tolerance: f64 },

    #[error("generating-function coefficients are unphysical: H = {h} must be negative")]
    UnphysicalNormalization { h: f64 },

    #[error("coefficients do not describe a Hermitian density matrix: {0}")]
    NonHermitianCoeffs(String),

    #[error("parameters do not describe a thermal bath: {0}")]
    NotThermal(String),

    #[error("parameters are not the D1 = mu = 0, D2 = lambda special case: {0}")]
    NotSpecialCase(String),

    #[error("integration step too large: trace error {trace_error:e} at t = {t}")]
    StepTooLarge { t: f64, trace_error: f64 },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("missing model parameter `{0}`")]
    MissingParam(String),

    #[error("inconsistent model parameters: {0}")]
    InconsistentParams(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
