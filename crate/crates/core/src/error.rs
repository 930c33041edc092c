use thiserror::Error;

pub type Result<T> = core::result::Result<T, GsdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GsdError {
    #[error("psi = {psi} is outside [1, {m}]")]
    PsiOutOfRange { psi: f64, m: u32 },
    #[error("rho = {0} is outside [0, 1]")]
    RhoOutOfRange(f64),
    #[error("scale must have at least 3 categories, got {0}")]
    ScaleTooSmall(u32),
    #[error("category {k} is outside 1..={m}")]
    CategoryOutOfRange { k: u32, m: u32 },
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("sample is empty")]
    EmptySample,
    #[error("sample size {n} is below the minimum of {min}")]
    SampleTooSmall { n: u64, min: u64 },
    #[error("expected {expected} categories, got {got}")]
    ScaleMismatch { expected: u32, got: u32 },
    #[error("latent decomposition is undefined: {0}")]
    Degenerate(&'static str),
    #[error("phi needs rho >= C(psi) = {c}, got rho = {rho}")]
    NotUnderdispersed { rho: f64, c: f64 },
    #[error("log-likelihood is not differentiable at psi = {psi}, rho = {rho}")]
    NonDifferentiable { psi: f64, rho: f64 },
    #[error("no grid point satisfies p_max <= {bound}")]
    InfeasibleConstraint { bound: f64 },
    #[error("{kind} {index} has no ratings")]
    EmptyLine { kind: &'static str, index: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
