//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),

    #[error("points per axis must be a power of two >= 16, got {0}")]
    BadPointCount(usize),

    #[error("side length must be positive and finite, got {0}")]
    BadSideLength(f64),

    #[error("expected a {expected}-side field")]
    SideMismatch { expected: &'static str },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dilation factor must be a power of two, got {0}")]
    BadDilationFactor(f64),

    #[error("band limit violated: relative energy {energy:.3e} above |xi| = {limit:.6} exceeds tolerance")]
    BandLimitViolation { limit: f64, energy: f64 },

    #[error("translation offset {0} is not an integer multiple of the grid spacing")]
    OffLatticeShift(f64),

    #[error("region does not fit inside the torus (needs {needed:.6}, period {period:.6})")]
    RegionTooLarge { needed: f64, period: f64 },

    #[error("aliasing budget violated: torus side {side:.3} < required {required:.3}")]
    AliasingBudget { side: f64, required: f64 },

    #[error("time value {0:.12e} is neither 0 nor on a time-grid node")]
    TimeOffNodes(f64),

    #[error("time field value {value:.6} outside [0, {t_max:.6}]")]
    TimeOutOfRange { value: f64, t_max: f64 },

    #[error("quadrature did not converge: last delta {last_delta:.3e} after {panels} panels")]
    QuadratureDiverged { panels: usize, last_delta: f64 },

    #[error("phase gradient vanishes on the probe support (min |grad| = {0:.3e})")]
    VanishingGradient(f64),

    #[error("phase condition violated: {0}")]
    PhaseCondition(String),

    #[error("unknown phase name '{0}'")]
    UnknownPhase(String),

    #[error("input has zero norm")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
