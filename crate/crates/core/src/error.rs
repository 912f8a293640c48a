use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exp(-z^2) is not representable for z = {re} + {im}i; use the log-scaled evaluation")]
    Overflow { re: f64, im: f64 },

    #[error("asymptotic expansion requires |z| >= 5 and 1..=6 terms (got |z| = {modulus}, {terms} terms)")]
    DomainTooSmall { modulus: f64, terms: usize },

    #[error("energy must be non-negative (got {0} eV)")]
    NegativeEnergy(f64),

    #[error("wavenumber k = 0 is a singular point of the transfer matrix")]
    ZeroWavenumber,

    #[error("|t22| = {0:e} is too small: k sits on a pole of the transmission amplitude")]
    PoleProximity(f64),

    #[error("invalid potential profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Newton iteration diverged after {iterations} steps")]
    Divergence { iterations: usize },

    #[error("asymptotic pole index must be >= 2 (got {0})")]
    IndexTooSmall(usize),

    #[error("the asymptotic anchor pole at n = {0} did not converge")]
    AnchorFailure(usize),

    #[error("kappa = {re} + {im}i is not a pole: outgoing boundary residual {residual:e}")]
    NotAPole { re: f64, im: f64, residual: f64 },

    #[error("normalization bracket {0:e} is degenerate")]
    NormalizationDegenerate(f64),

    #[error("packet validity ratio |x_c|/(2 sigma) = {0} is below 3")]
    UnreliableRegime(f64),

    #[error("free density {0:e} underflows")]
    FreeDensityUnderflow(f64),

    #[error("window is not asymptotic: local log-log slope spans {spread}")]
    NonAsymptotic { spread: f64 },

    #[error("quadrature needs {required} nodes, above the budget of {budget}")]
    NodeBudgetExceeded { required: u64, budget: u64 },

    #[error("truncation {requested} exceeds the {available} available poles")]
    TruncationTooLarge { requested: usize, available: usize },

    #[error("catalog format error: {0}")]
    CatalogFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
