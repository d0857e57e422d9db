//! Time-periodic advection-diffusion on periodically moving closed curves.
//!
//! The equation `Delta_g u - c u - u_t = f` is pulled back to the reference
//! curve `M = Gamma(0)` and discretized on a periodic parameter grid. On top of
//! the initial value solver sit two periodic solvers (a contraction fixed-point
//! iteration and a direct monodromy solve), a narrow-band extension used as a
//! verification instrument, and a set of diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod expr;
pub mod grid;
pub mod linalg;
pub mod metric;
pub mod narrowband;
pub mod periodic;
pub mod runner;
pub mod surface;

pub use error::{Error, Result};
pub use evolution::{
    EmbeddedMetric, FlatMetric, Forcing, IvpConfig, MetricFamily, MetricSlice, Propagator, Scheme, TimeReversed,
    ZeroOrder,
};
pub use grid::{ParameterGrid, ScalarField, SpaceTimeField};
pub use metric::{assemble_metric, laplace_beltrami_apply, MetricSample, WeightedMeasure};
pub use periodic::{FixedPointReport, MonodromyReport, PeriodicProblem};
pub use surface::{build_frame, Chart, GeometryFrame, SurfaceFamily};
