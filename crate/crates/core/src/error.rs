use thiserror::Error;

use crate::cycle::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid rate matrix: {0}")]
    InvalidGenerator(String),

    #[error("transition graph is disconnected, stationary null space is degenerate")]
    DegenerateNullSpace,

    #[error("propagated probability component {component} = {value:e} is below the clamping threshold")]
    NegativeProbability { component: usize, value: f64 },

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("interaction duration must be finite and positive, got {0}")]
    InvalidDuration(f64),

    #[error("demon update map is not a contraction (gain = {gain})")]
    NonContraction { gain: f64 },

    #[error("no performance metrics in {mode:?} mode")]
    NotFunctional { mode: Mode },

    #[error("bit entropy change {0:e} is too small to normalise the efficiency bounds")]
    VanishingEntropyChange(f64),

    #[error("(delta = {delta}, epsilon = {epsilon}) lies outside the {region} region")]
    OutsideRegion {
        region: &'static str,
        delta: f64,
        epsilon: f64,
    },

    #[error("series fit residual {residual:e} exceeds tolerance {tolerance:e}")]
    FitFailed { residual: f64, tolerance: f64 },

    #[error("entropy gap {gap:e} at tau = {tau} is below the numerical floor")]
    DecayBelowFloor { tau: f64, gap: f64 },

    #[error("entropy gap is not monotone over the grid (first increase at index {index})")]
    DecayNonMonotone { index: usize },

    #[error("decay fit needs at least {needed} grid points, got {got}")]
    DecayGridTooSmall { needed: usize, got: usize },

    #[error("could not bracket a maximum of the erasure power: {0}")]
    NoBracket(String),

    #[error("grid is empty after region filtering")]
    EmptyGrid,

    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
}
