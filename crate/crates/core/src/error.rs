use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry mismatch: {0} vs {1}")]
    GeometryMismatch(String, String),

    #[error("diameter of the identity term is undefined")]
    IdentityDiameter,

    #[error("cannot parse Pauli term {text:?}: {reason}")]
    PauliParse { text: String, reason: String },

    #[error("ring of length {len} too small for rule radius {radius}")]
    RingTooSmall { len: usize, radius: usize },

    #[error("invalid Clifford rule: {0}")]
    InvalidRule(String),

    #[error("phase-space map is not invertible")]
    NotInvertible,

    #[error("search budget exceeded: {needed} candidates > budget {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("dense budget exceeded: L = {len} > {max}")]
    DenseBudget { len: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unitary synthesis verification failed: residual {0:e}")]
    SynthesisFailed(f64),

    #[error("branch offsets cover {given} clusters but spectrum has {clusters}")]
    BranchMismatch { given: usize, clusters: usize },

    #[error("invalid coin set: {constraint} violated at m = {m} (residual {residual:e})")]
    InvalidCoins {
        constraint: &'static str,
        m: i64,
        residual: f64,
    },

    #[error("coin set parse error: {0}")]
    CoinParse(String),

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("determinant magnitude {0} differs from 1")]
    NotOrthogonal(f64),

    #[error("band continuation failed near k in [{k_lo}, {k_hi}]: {reason}")]
    Continuation { k_lo: f64, k_hi: f64, reason: String },

    #[error("band gluing failed: {0}")]
    Gluing(String),

    #[error("winding estimate not integral: residual {0}")]
    WindingResidual(f64),

    #[error("winding methods disagree: unwrap {unwrap} vs fourier {fourier}")]
    WindingMismatch { unwrap: i64, fourier: i64 },

    #[error("quasi-energy not periodic: residual {0:e}")]
    Periodicity(f64),

    #[error("band set incomplete: multiplicities sum to {got}, expected {expected}")]
    IncompleteBands { got: usize, expected: usize },

    #[error("missing {0}")]
    Missing(&'static str),

    #[error("r_max {r_max} aliases on grid of {n_k} points")]
    Aliasing { r_max: usize, n_k: usize },

    #[error("decay fit window has {0} points, need at least 5")]
    FitWindow(usize),

    #[error("generator is not real: imaginary residual {0:e}")]
    NotReal(f64),

    #[error("no real logarithm: {0}")]
    NoRealLog(String),

    #[error("{0}")]
    Invalid(String),
}
