//! Browser bindings for three periflow operations: a periodic solve on a
//! moving curve, the heat-kernel decay check and the narrow-band distance field.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use periflow::evolution::{EmbeddedMetric, Forcing, IvpConfig, Propagator, Scheme, ZeroOrder};
use periflow::expr::Expr;
use periflow::narrowband::build_band;
use periflow::periodic::{monodromy_solve, periodicity_residuals, PeriodicProblem};
use periflow::surface::{Chart, SurfaceFamily};
use periflow::ParameterGrid;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("unknown family '{0}'")]
    Family(String),
    #[error("unknown zero-order mode '{0}'")]
    ZeroOrder(String),
    #[error(transparent)]
    Expr(#[from] periflow::expr::ExprError),
    #[error(transparent)]
    Solver(#[from] periflow::Error),
}

pub fn family(name: &str, shape: f64, period: f64) -> Result<SurfaceFamily, DemoError> {
    let family = match name {
        "circle" => SurfaceFamily::Circle { radius: 1.0, period },
        "breathing" => SurfaceFamily::BreathingCircle { amplitude: shape, period },
        "rotating_ellipse" => {
            SurfaceFamily::RotatingEllipse { semi_major: 1.0 + shape, semi_minor: 1.0, turns: 1, period }
        }
        "bean" => SurfaceFamily::Bean { amplitude: shape, period },
        other => return Err(DemoError::Family(other.to_string())),
    };
    family.validate()?;
    Ok(family)
}

fn zero_order(name: &str, value: f64) -> Result<ZeroOrder, DemoError> {
    Ok(match name {
        "zero" => ZeroOrder::Zero,
        "constant" => ZeroOrder::Constant(value),
        "divergence" => ZeroOrder::Divergence,
        "divergence_plus" => ZeroOrder::DivergencePlus(value),
        other => return Err(DemoError::ZeroOrder(other.to_string())),
    })
}

/// Periodic solution sampled at a few frames, with positions on the moving curve.
#[wasm_bindgen]
pub struct PeriodicRun {
    nodes: usize,
    frames: Vec<Vec<f64>>,
    times: Vec<f64>,
    sigma_min: f64,
    relaxed: f64,
    strict: f64,
    mean_drift: f64,
}

#[wasm_bindgen]
impl PeriodicRun {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Interleaved `x, y, u` for every node of frame `k`.
    pub fn frame(&self, k: usize) -> Vec<f64> {
        self.frames[k].clone()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn relaxed_residual(&self) -> f64 {
        self.relaxed
    }

    pub fn strict_residual(&self) -> f64 {
        self.strict
    }

    pub fn mean_drift(&self) -> f64 {
        self.mean_drift
    }
}

#[allow(clippy::too_many_arguments)]
pub fn periodic_run(
    family_name: &str,
    shape: f64,
    mode: &str,
    coefficient: f64,
    forcing: &str,
    target_mean: f64,
    nodes: usize,
    steps: usize,
    frames: usize,
) -> Result<PeriodicRun, DemoError> {
    let chart = Arc::new(family(family_name, shape, 1.0)?);
    let grid = ParameterGrid::new(nodes, steps, 1.0)?;
    let forcing = if forcing.trim().is_empty() || forcing.trim() == "0" {
        Forcing::Zero
    } else {
        let e = Expr::parse(forcing)?;
        Forcing::function(move |th, t| e.eval(th, t, 1.0))
    };
    let metric = Arc::new(EmbeddedMetric::new(chart.clone(), &grid));
    let config = IvpConfig::new(grid.clone(), Scheme::CrankNicolson, zero_order(mode, coefficient)?);
    let problem = PeriodicProblem::new(metric, config, forcing, target_mean);
    let report = monodromy_solve(&problem)?;
    let residuals = periodicity_residuals(&report.trajectory, &problem.propagator()?.measure(0));
    let stride = (steps / frames.max(1)).max(1);
    let mut out = Vec::new();
    let mut times = Vec::new();
    for level in report.trajectory.levels.iter().step_by(stride) {
        let mut frame = Vec::with_capacity(3 * nodes);
        for (i, u) in level.values.iter().enumerate() {
            let p = chart.position(grid.theta(i), level.time);
            frame.extend([p.x, p.y, *u]);
        }
        out.push(frame);
        times.push(level.time);
    }
    Ok(PeriodicRun {
        nodes,
        frames: out,
        times,
        sigma_min: report.sigma_min,
        relaxed: residuals.relaxed,
        strict: residuals.strict,
        mean_drift: residuals.mean_drift,
    })
}

/// Max error per time level of Crank-Nicolson against `exp(-t) cos(theta)` on the unit circle.
pub fn heat_decay_errors(nodes: usize, steps: usize) -> Result<Vec<f64>, DemoError> {
    let grid = ParameterGrid::new(nodes, steps, 1.0)?;
    let metric = EmbeddedMetric::new(Arc::new(SurfaceFamily::unit_circle()), &grid);
    let config = IvpConfig::new(grid.clone(), Scheme::CrankNicolson, ZeroOrder::Zero);
    let traj = Propagator::new(&metric, &config, &Forcing::Zero)?.solve_ivp(&grid.sample(0.0, f64::cos))?;
    Ok(traj
        .levels
        .iter()
        .map(|l| {
            let decay = (-l.time).exp();
            l.values.iter().enumerate().map(|(i, u)| (u - decay * grid.theta(i).cos()).abs()).fold(0.0, f64::max)
        })
        .collect())
}

/// Interleaved `x, y, d` over the active band nodes of the curve at `t = 0`.
pub fn band_distance_field(family_name: &str, shape: f64, h: f64, delta: f64) -> Result<Vec<f64>, DemoError> {
    let band = build_band(Arc::new(family(family_name, shape, 1.0)?), 0.0, h, delta)?;
    Ok(band
        .grid
        .active_nodes()
        .flat_map(|k| {
            let p = band.grid.position(k);
            [p.x, p.y, band.field.d[k]]
        })
        .collect())
}

fn js(e: DemoError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = periodicSolution)]
#[allow(clippy::too_many_arguments)]
pub fn periodic_solution(
    family: &str,
    shape: f64,
    mode: &str,
    coefficient: f64,
    forcing: &str,
    target_mean: f64,
    nodes: usize,
    steps: usize,
    frames: usize,
) -> Result<PeriodicRun, JsError> {
    periodic_run(family, shape, mode, coefficient, forcing, target_mean, nodes, steps, frames).map_err(js)
}

#[wasm_bindgen(js_name = heatDecay)]
pub fn heat_decay(nodes: usize, steps: usize) -> Result<Vec<f64>, JsError> {
    heat_decay_errors(nodes, steps).map_err(js)
}

#[wasm_bindgen(js_name = bandDistance)]
pub fn band_distance(family: &str, shape: f64, h: f64, delta: f64) -> Result<Vec<f64>, JsError> {
    band_distance_field(family, shape, h, delta).map_err(js)
}
