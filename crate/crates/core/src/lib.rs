//! Spectral laboratory for dispersive propagators with homogeneous phases.
//!
//! The crate builds up from periodic grids and FFT-backed fields to phase
//! symbols, Littlewood-Paley projections, propagator application, and
//! operator-norm estimation by alternating maximization.

pub mod error;
pub mod estimator;
pub mod field;
pub mod fit;
pub mod grid;
pub mod lpdecomp;
pub mod norms;
pub mod phase;
pub mod propagator;
pub mod quad;

pub use error::{Error, Result};
pub use estimator::{
    InputClass, LpSummationReport, OpNormEstimate, ScalingFit, ScalingPoint, SweepBudget,
    SweepMode, TransferenceReport,
};
pub use field::{Field, FftEngine, LpExponent, Side};
pub use grid::{make_grid, Grid, Point, Region, TAU};
pub use phase::{builtin_phase, PhaseConstants, PhaseFn};
pub use propagator::{MaximalResult, TimeField, TimeGrid};
