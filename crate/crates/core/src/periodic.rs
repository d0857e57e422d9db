//! Time-periodic solutions with prescribed initial mean `c`.
//!
//! Both solvers work with the mean-adjusted map `K(w) = Q J(w + c)`, where `Q`
//! removes the `do_0`-mean. A fixed point `w*` gives the relaxed-periodic
//! initial datum `u0* = w* + c`. The fixed-point route iterates `K`; the
//! monodromy route assembles `J(u) = A u + b` column by column and solves
//! `(I - Q A) w = Q J(c)` directly.

use std::sync::Arc;
use std::thread;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::{
    trapezoid_weight, Forcing, IvpConfig, MetricFamily, Propagator, Scheme, TimeReversed, ZeroOrder,
};
use crate::grid::{max_abs_diff, ParameterGrid, ScalarField, SpaceTimeField};
use crate::metric::WeightedMeasure;

/// Largest grid for which the dense monodromy matrix is assembled.
pub const MAX_MONODROMY_NODES: usize = 2048;

/// Relative threshold on the smallest singular value of `I - Q A`.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Clone)]
pub struct PeriodicProblem {
    pub family: Arc<dyn MetricFamily>,
    pub config: IvpConfig,
    pub forcing: Forcing,
    pub target_mean: f64,
}

impl PeriodicProblem {
    pub fn new(family: Arc<dyn MetricFamily>, config: IvpConfig, forcing: Forcing, target_mean: f64) -> Self {
        Self { family, config, forcing, target_mean }
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.config.grid
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(self.family.as_ref(), &self.config, &self.forcing)
    }
}

/// Subtracts the `do_0`-mean.
pub fn mean_adjust(u: &ScalarField, measure0: &WeightedMeasure) -> ScalarField {
    let mean = measure0.mean(&u.values);
    ScalarField::new(u.values.iter().map(|v| v - mean).collect(), u.time)
}

fn shifted(w: &ScalarField, c: f64) -> ScalarField {
    ScalarField::new(w.values.iter().map(|v| v + c).collect(), 0.0)
}

/// The mean-adjusted end map `K` bound to one problem.
pub struct MeanAdjustedMap {
    propagator: Propagator,
    measure0: WeightedMeasure,
    target_mean: f64,
}

impl MeanAdjustedMap {
    pub fn new(problem: &PeriodicProblem) -> Result<Self> {
        let propagator = problem.propagator()?;
        let measure0 = propagator.measure(0);
        Ok(Self { propagator, measure0, target_mean: problem.target_mean })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn measure0(&self) -> &WeightedMeasure {
        &self.measure0
    }

    /// `J(w + c)`.
    pub fn end_map(&self, w: &ScalarField) -> Result<ScalarField> {
        self.propagator.end_map(&shifted(w, self.target_mean))
    }

    pub fn apply(&self, w: &ScalarField) -> Result<ScalarField> {
        let mut out = mean_adjust(&self.end_map(w)?, &self.measure0);
        out.time = 0.0;
        Ok(out)
    }

    /// Trajectory `J0(w + c)` started from the relaxed-periodic datum.
    pub fn trajectory(&self, w: &ScalarField) -> Result<SpaceTimeField> {
        self.propagator.solve_ivp(&shifted(w, self.target_mean))
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointReport {
    pub iterations: usize,
    /// `||K(w_k) - w_k||_inf` per iterate.
    pub residuals: Vec<f64>,
    /// `||w_{k+1} - w_k|| / ||w_k - w_{k-1}||`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// `u0* = w* + c`.
    pub initial: ScalarField,
    pub trajectory: SpaceTimeField,
}

impl FixedPointReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Iterates `w_{k+1} = K(w_k)` from `start` (zero when `None`).
pub fn fixed_point_solve(
    problem: &PeriodicProblem,
    tol: f64,
    max_iter: usize,
    start: Option<&ScalarField>,
) -> Result<FixedPointReport> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    let k = MeanAdjustedMap::new(problem)?;
    let n = problem.grid().nodes();
    let mut w = match start {
        Some(s) => {
            s.check_len(n)?;
            mean_adjust(s, k.measure0())
        }
        None => ScalarField::zeros(n, 0.0),
    };
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut converged = false;
    while residuals.len() < max_iter {
        let next = k.apply(&w)?;
        let r = max_abs_diff(&next.values, &w.values);
        if let Some(prev) = residuals.last() {
            if *prev > 0.0 {
                ratios.push(r / prev);
            }
        }
        residuals.push(r);
        w = next;
        if r <= tol {
            converged = true;
            break;
        }
    }
    let trajectory = k.trajectory(&w)?;
    Ok(FixedPointReport {
        iterations: residuals.len(),
        residuals,
        ratios,
        converged,
        initial: shifted(&w, problem.target_mean),
        trajectory,
    })
}

/// Measured Lipschitz constants of `J` and `K` over probe pairs.
#[derive(Clone, Debug)]
pub struct ContractionEstimate {
    pub theta_j: f64,
    pub theta_k: f64,
    pub epsilon: f64,
    pub slack: f64,
    /// `e^{-eps T} (1 + slack)`.
    pub bound: f64,
    pub ratios_j: Vec<f64>,
    pub ratios_k: Vec<f64>,
    pub skipped: usize,
}

/// `eps = (ln 2 / T + c0) / 2`.
pub fn contraction_epsilon(c0: f64, period: f64) -> f64 {
    0.5 * (std::f64::consts::LN_2 / period + c0)
}

pub fn scheme_slack(grid: &ParameterGrid) -> f64 {
    3.0 * (grid.dt() + grid.dtheta() * grid.dtheta())
}

/// Measures `theta_J` and `theta_K` and asserts `theta_J <= e^{-eps T}(1 + slack)`
/// and `theta_K <= 2 theta_J`. Requires `c >= c0 > ln 2 / T` pointwise.
pub fn contraction_estimate(
    problem: &PeriodicProblem,
    c0: f64,
    probes: &[(ScalarField, ScalarField)],
) -> Result<ContractionEstimate> {
    let grid = problem.grid();
    let threshold = std::f64::consts::LN_2 / grid.period();
    if !(c0 > threshold) {
        return Err(Error::Precondition(format!("c0 must exceed ln2/T ≈ {threshold:.4}")));
    }
    if let Some(lb) = problem.config.zero_order.lower_bound() {
        if lb < c0 {
            return Err(Error::Precondition(format!("zero-order coefficient {lb} is below c0 = {c0}")));
        }
    }
    let k = MeanAdjustedMap::new(problem)?;
    let epsilon = contraction_epsilon(c0, grid.period());
    let slack = scheme_slack(grid);
    let bound = (-epsilon * grid.period()).exp() * (1.0 + slack);
    let mut est = ContractionEstimate {
        theta_j: 0.0,
        theta_k: 0.0,
        epsilon,
        slack,
        bound,
        ratios_j: Vec::new(),
        ratios_k: Vec::new(),
        skipped: 0,
    };
    for (idx, (a, b)) in probes.iter().enumerate() {
        let d0 = max_abs_diff(&a.values, &b.values);
        if d0 == 0.0 {
            est.skipped += 1;
            continue;
        }
        let (ja, jb) = (k.end_map(a)?, k.end_map(b)?);
        let rj = max_abs_diff(&ja.values, &jb.values) / d0;
        let rk = max_abs_diff(&mean_adjust(&ja, k.measure0()).values, &mean_adjust(&jb, k.measure0()).values) / d0;
        if rj > bound {
            return Err(Error::ContractionViolation { probe: idx, ratio: rj, bound });
        }
        if rk > 2.0 * rj * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::ContractionViolation { probe: idx, ratio: rk, bound: 2.0 * rj });
        }
        est.theta_j = est.theta_j.max(rj);
        est.theta_k = est.theta_k.max(rk);
        est.ratios_j.push(rj);
        est.ratios_k.push(rk);
    }
    Ok(est)
}

/// Dense affine realization `J(u) = A u + b` of the end map.
#[derive(Clone, Debug)]
pub struct MonodromyOracle {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl MonodromyOracle {
    pub fn assemble(propagator: &Propagator) -> Result<Self> {
        let n = propagator.grid().nodes();
        if n > MAX_MONODROMY_NODES {
            return Err(Error::Precondition(format!("monodromy assembly needs N <= {MAX_MONODROMY_NODES}, got {n}")));
        }
        let workers = thread::available_parallelism().map_or(1, |p| p.get()).min(n);
        let chunk = n.div_ceil(workers);
        let block = |w: usize| -> Result<Vec<Vec<f64>>> {
            (w * chunk..((w + 1) * chunk).min(n))
                .map(|j| {
                    let mut e = ScalarField::zeros(n, 0.0);
                    e.values[j] = 1.0;
                    Ok(propagator.end_map_homogeneous(&e)?.values)
                })
                .collect()
        };
        // targets without threads (wasm) report a single worker
        let columns: Vec<Result<Vec<Vec<f64>>>> = if workers == 1 {
            vec![block(0)]
        } else {
            thread::scope(|scope| {
                let handles: Vec<_> = (0..workers).map(|w| scope.spawn(move || block(w))).collect();
                handles.into_iter().map(|h| h.join().expect("monodromy worker panicked")).collect()
            })
        };
        let mut a = DMatrix::zeros(n, n);
        let mut j = 0;
        for block in columns {
            for col in block? {
                a.set_column(j, &DVector::from_vec(col));
                j += 1;
            }
        }
        let b = DVector::from_vec(propagator.end_map(&ScalarField::zeros(n, 0.0))?.values);
        Ok(Self { a, b })
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        let v = &self.a * DVector::from_column_slice(&u.values) + &self.b;
        ScalarField::new(v.as_slice().to_vec(), u.time)
    }
}

fn projector(measure0: &WeightedMeasure) -> DMatrix<f64> {
    let n = measure0.weights.len();
    DMatrix::from_fn(n, n, |i, j| f64::from(u8::from(i == j)) - measure0.weights[j] / measure0.total)
}

#[derive(Clone, Debug)]
pub struct MonodromyReport {
    pub initial: ScalarField,
    pub trajectory: SpaceTimeField,
    /// Smallest singular value of `I - Q A`.
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub oracle: MonodromyOracle,
}

pub fn monodromy_solve(problem: &PeriodicProblem) -> Result<MonodromyReport> {
    let k = MeanAdjustedMap::new(problem)?;
    let oracle = MonodromyOracle::assemble(k.propagator())?;
    let n = problem.grid().nodes();
    let q = projector(k.measure0());
    let system = DMatrix::identity(n, n) - &q * &oracle.a;
    let sv = system.clone().singular_values();
    let sigma_min = sv.min();
    let sigma_max = sv.max();
    if !(sigma_min > SINGULAR_THRESHOLD * sigma_max.max(1.0)) {
        return Err(Error::NonUnique { sigma_min });
    }
    let rhs = &q * DVector::from_vec(k.end_map(&ScalarField::zeros(n, 0.0))?.values);
    let w = system.lu().solve(&rhs).ok_or(Error::NonUnique { sigma_min })?;
    let w = ScalarField::new(w.as_slice().to_vec(), 0.0);
    let trajectory = k.trajectory(&w)?;
    Ok(MonodromyReport { initial: shifted(&w, problem.target_mean), trajectory, sigma_min, sigma_max, oracle })
}

/// Relaxed-periodic solution of the adjoint problem `Delta_g phi + phi_t = f`
/// with `mean phi(., T) = 0` and `phi(., T) = phi(., 0) - mean phi(., 0)`,
/// obtained from the forward problem on the reversed metric family.
pub fn adjoint_solve(
    family: Arc<dyn MetricFamily>,
    grid: &ParameterGrid,
    scheme: Scheme,
    forcing: &Forcing,
) -> Result<SpaceTimeField> {
    let reversed: Arc<dyn MetricFamily> = Arc::new(TimeReversed(family));
    let config = IvpConfig::new(grid.clone(), scheme, ZeroOrder::Zero);
    let problem = PeriodicProblem::new(reversed, config, forcing.time_reversed(grid)?, 0.0);
    Ok(monodromy_solve(&problem)?.trajectory.time_reversed())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicityResiduals {
    pub relaxed: f64,
    pub strict: f64,
    pub mean_drift: f64,
}

pub fn periodicity_residuals(trajectory: &SpaceTimeField, measure0: &WeightedMeasure) -> PeriodicityResiduals {
    let first = trajectory.first();
    let last = trajectory.last();
    let m0 = measure0.mean(&first.values);
    let m1 = measure0.mean(&last.values);
    let relaxed =
        first.values.iter().zip(&last.values).fold(0.0f64, |acc, (a, b)| acc.max(((a - m0) - (b - m1)).abs()));
    PeriodicityResiduals { relaxed, strict: max_abs_diff(&first.values, &last.values), mean_drift: m1 - m0 }
}

/// `int_0^T int f do(t) dt` with the trapezoid rule in time.
pub fn space_time_integral(family: &dyn MetricFamily, grid: &ParameterGrid, f: &SpaceTimeField) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..=grid.steps() {
        let w = family.slice(grid.time(k))?.measure();
        total += trapezoid_weight(k, grid.steps(), grid.dt()) * w.integrate(&f.levels[k].values);
    }
    Ok(total)
}
