use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("background chain is not ergodic: lambda = {lambda} >= c*mu = {cmu}")]
    UnstableChain { lambda: f64, cmu: f64 },
    #[error("fluid level is not stable: mean drift {drift} >= 0")]
    UnstableFluid { drift: f64 },
    #[error("no drift certificate found")]
    CertificateNotFound,
    #[error("alpha = {0} lies on the branch cut")]
    OnCut(f64),
    #[error("alpha = {0} is a pole of the continued fraction")]
    Pole(f64),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("multiplicity of the zero exceeds {0}")]
    MultiplicityTooHigh(usize),
    #[error("denominator vanishes: {0}")]
    ZeroDenominator(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("negative boundary mass {value} at phase {phase}")]
    NegativeMass { phase: usize, value: f64 },
    #[error("insufficient samples: {have} < {need}")]
    InsufficientSamples { have: usize, need: usize },
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, FluidError>;
