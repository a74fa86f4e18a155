use thiserror::Error;

/// Errors produced by the solvers, the sampler and the geometry routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate pair: marks share the first coordinate {rho1}")]
    DegeneratePair { rho1: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("query out of range: {0}")]
    Range(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("horizon {t} exceeds the validity time {tstar}")]
    Horizon { t: f64, tstar: f64 },
    #[error("positivity lost at t = {t}: value {value}")]
    PositivityLoss { t: f64, value: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unstable step {step}: must not exceed {bound}")]
    Stability { step: f64, bound: f64 },
    #[error("negative effective rate {rate} for pair ({minus}, {plus})")]
    RateSign { minus: usize, plus: usize, rate: f64 },
    #[error("no positivity hypothesis holds: {0}")]
    Hypothesis(String),
    #[error("marginal {value} below the division guard {guard}")]
    DivisionGuard { value: f64, guard: f64 },
    #[error("support condition failed: bracket {alpha} below {floor}")]
    SupportCondition { alpha: f64, floor: f64 },
    #[error("degenerate rate: kernel vanishes on an occupied pair ({minus}, {plus})")]
    DegenerateRate { minus: usize, plus: usize },
    #[error("jump count exceeded the cap {cap}")]
    Runaway { cap: usize },
    #[error("corrupt trajectory: {0}")]
    Corruption(String),
    #[error("reconstructed field is not a gradient: curl {curl}")]
    NonGradient { curl: f64 },
    #[error("insufficient samples: {got} < {need}")]
    Power { got: usize, need: usize },
    #[error("invalid fixture: {0}")]
    Fixture(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
