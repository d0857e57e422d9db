use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {found} nodes but the grid has {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time {t} lies outside [0, {period}]")]
    TimeOutOfRange { t: f64, period: f64 },

    #[error("degenerate surface at theta = {theta}, t = {t}: |dX/dtheta| = {speed:e}")]
    DegenerateSurface { theta: f64, t: f64, speed: f64 },

    #[error("degenerate metric at theta = {theta}, t = {t}: condition number {condition:e}")]
    DegenerateMetric { theta: f64, t: f64, condition: f64 },

    #[error("linear solve failed at time level {level}")]
    SingularStep { level: usize },

    #[error("non-finite value produced at time level {level}")]
    NonFinite { level: usize },

    #[error("periodic problem is not uniquely solvable: smallest singular value {sigma_min:e}")]
    NonUnique { sigma_min: f64 },

    #[error("contraction bound violated by probe {probe}: ratio {ratio} > bound {bound}")]
    ContractionViolation { probe: usize, ratio: f64, bound: f64 },

    #[error("narrow band too wide: delta * max curvature = {product} (must stay below 1/2)")]
    BandTooWide { product: f64 },

    #[error("narrow band too thin: {0}")]
    BandTooThin(String),

    #[error("closest-point projection failed near ({x}, {y})")]
    Projection { x: f64, y: f64 },

    #[error("normal ray at surface node {node} leaves the band grid")]
    Extraction { node: usize },

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
