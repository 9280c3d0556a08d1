use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no ground-state bracket for N={dim}, p={p} (scanned u0 up to {u0_max})")]
    NoGroundStateBracket { dim: usize, p: f64, u0_max: f64 },

    #[error("resonant truncation radius r0={r0}, perturb r0")]
    ResonantRadius { r0: f64 },

    #[error("coupling matrix singular")]
    SingularCoupling,

    #[error("linear system singular")]
    SingularSystem,

    #[error("no convergence after {iterations} iterations (last iterate {last:?})")]
    NoConvergence { iterations: usize, last: Vec<f64> },

    #[error("spectrum unavailable: rerun with spectrum_policy=compute")]
    SpectrumUnavailable,

    #[error("critical regime requires the quadratic coefficients a_j^(i) of each potential")]
    MissingQuadraticCoefficients,

    #[error("degenerate denominator: beta^2 = mu1*mu2")]
    DegenerateDenominator,

    #[error("closed form outside its domain: {0}")]
    FormulaDomain(String),

    #[error("model parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
