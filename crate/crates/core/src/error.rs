use thiserror::Error;

use crate::atlas::ChartId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tangent vector too short to define a direction (|y| = {norm:e})")]
    SingularDirection { norm: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("fundamental tensor is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("no chart of the atlas covers the given coordinates")]
    NoCoveringChart,

    #[error("state left the atlas in chart {chart}")]
    LeftAtlas { chart: ChartId },

    #[error("speed drifted by {drift:e} (tolerance {tolerance:e}) during geodesic integration")]
    EnergyDriftExceeded { drift: f64, tolerance: f64 },

    #[error("shooting did not converge (residual {residual:e})")]
    ShootingDiverged { residual: f64 },

    #[error("rejection sampling exceeded its budget of {budget} proposals")]
    RejectionBudgetExceeded { budget: usize },

    #[error("discrete path has {available} steps but the clock needs {needed}")]
    InsufficientSteps { available: usize, needed: usize },

    #[error("query time {t} outside the path horizon [0, {horizon}]")]
    OutOfHorizon { t: f64, horizon: f64 },

    #[error("finite-difference stencil around the point leaves chart {chart}")]
    StencilLeftChart { chart: ChartId },

    #[error("wind too strong for Zermelo navigation (h(W,W) = {speed_sq})")]
    NavigationTooFast { speed_sq: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mean of the measure family is not available analytically")]
    MeanUnavailable,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse category used by front ends for exit codes and machine-readable output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_)
            | Error::Unknown { .. }
            | Error::DimensionMismatch { .. }
            | Error::NavigationTooFast { .. }
            | Error::MeanUnavailable => "config",
            Error::NoCoveringChart
            | Error::LeftAtlas { .. }
            | Error::StencilLeftChart { .. }
            | Error::OutOfHorizon { .. }
            | Error::InsufficientSteps { .. } => "domain",
            _ => "numerical",
        }
    }
}
