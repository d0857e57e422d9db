//! Initial value problem `Delta_g(t) u - c u - u_t = f`, `u(., 0) = u0` on the
//! reference curve: the solution map `J0` and the end-time map `J`.
//!
//! The zero-order modes built on `c = 1/2 tr_g(g_t)` are stepped in the
//! conservative form `(sqrt(det g) u)_t / sqrt(det g)`, which keeps the discrete
//! mass `sum w_i u_i` exactly balanced against the forcing.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{check_len, ParameterGrid, ScalarField, SpaceTimeField};
use crate::linalg::CyclicTridiagonal;
use crate::metric::{assemble_metric, flux_laplacian, half_node_coefficients, MetricSample, WeightedMeasure};
use crate::surface::Chart;

pub type SpaceTimeFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward_euler" | "be" => Ok(Self::BackwardEuler),
            "crank_nicolson" | "cn" => Ok(Self::CrankNicolson),
            other => Err(Error::Precondition(format!(
                "unknown scheme '{other}' (expected backward_euler or crank_nicolson)"
            ))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BackwardEuler => "backward_euler",
            Self::CrankNicolson => "crank_nicolson",
        })
    }
}

/// Choice of the zero-order coefficient `c`.
#[derive(Clone)]
pub enum ZeroOrder {
    Zero,
    Constant(f64),
    /// `c = 1/2 tr_g(g_t)`, the pullback of `div_Gamma v`.
    Divergence,
    /// `c = 1/2 tr_g(g_t) + alpha`.
    DivergencePlus(f64),
    Custom(SpaceTimeFn),
}

impl ZeroOrder {
    pub fn is_conservative(&self) -> bool {
        matches!(self, Self::Divergence | Self::DivergencePlus(_))
    }

    /// Pointwise lower bound of `c` when it is known without sampling.
    pub fn lower_bound(&self) -> Option<f64> {
        match *self {
            Self::Zero => Some(0.0),
            Self::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// The part of `c` applied as an explicit coefficient; the `1/2 tr` part of
    /// conservative modes lives in the time derivative instead.
    fn explicit_values(&self, grid: &ParameterGrid, t: f64) -> Vec<f64> {
        let n = grid.nodes();
        match self {
            Self::Zero | Self::Divergence => vec![0.0; n],
            Self::Constant(c) | Self::DivergencePlus(c) => vec![*c; n],
            Self::Custom(f) => grid.thetas().into_iter().map(|th| f(th, t)).collect(),
        }
    }
}

impl fmt::Debug for ZeroOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Divergence => f.write_str("Divergence"),
            Self::DivergencePlus(a) => write!(f, "DivergencePlus({a})"),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Right-hand side `f`.
#[derive(Clone, Default)]
pub enum Forcing {
    #[default]
    Zero,
    Function(SpaceTimeFn),
    Sampled(SpaceTimeField),
}

impl Forcing {
    pub fn function(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn sample(&self, grid: &ParameterGrid) -> Result<SpaceTimeField> {
        match self {
            Self::Zero => Ok(SpaceTimeField::zeros(grid)),
            Self::Function(f) => Ok(SpaceTimeField::sample(grid, |th, t| f(th, t))),
            Self::Sampled(field) => {
                check_len(grid.steps() + 1, field.levels.len())?;
                for l in &field.levels {
                    l.check_len(grid.nodes())?;
                }
                Ok(field.clone())
            }
        }
    }

    /// `f(theta, T - t)`.
    pub fn time_reversed(&self, grid: &ParameterGrid) -> Result<Self> {
        Ok(match self {
            Self::Zero => Self::Zero,
            Self::Function(f) => {
                let f = f.clone();
                let period = grid.period();
                Self::Function(Arc::new(move |th, t| f(th, period - t)))
            }
            Self::Sampled(field) => Self::Sampled(field.time_reversed()),
        })
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Function(_) => f.write_str("Function(..)"),
            Self::Sampled(s) => write!(f, "Sampled({} levels)", s.levels.len()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IvpConfig {
    pub grid: ParameterGrid,
    pub scheme: Scheme,
    pub zero_order: ZeroOrder,
}

impl IvpConfig {
    pub fn new(grid: ParameterGrid, scheme: Scheme, zero_order: ZeroOrder) -> Self {
        Self { grid, scheme, zero_order }
    }
}

/// The metric data the stepper needs at one time.
#[derive(Clone, Debug)]
pub struct MetricSlice {
    pub time: f64,
    pub dtheta: f64,
    pub sqrt_det: Vec<f64>,
    /// `coef[i]` is the flux coefficient at the half node `i + 1/2`.
    pub coef: Vec<f64>,
    pub half_trace: Vec<f64>,
}

impl MetricSlice {
    pub fn from_sqrt_det(time: f64, dtheta: f64, sqrt_det: Vec<f64>, half_trace: Vec<f64>) -> Self {
        let coef = half_node_coefficients(&sqrt_det);
        Self { time, dtheta, sqrt_det, coef, half_trace }
    }

    pub fn nodes(&self) -> usize {
        self.sqrt_det.len()
    }

    pub fn measure(&self) -> WeightedMeasure {
        WeightedMeasure::from_sqrt_det(&self.sqrt_det, self.dtheta)
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        flux_laplacian(&self.sqrt_det, &self.coef, self.dtheta, u)
    }

    /// Tridiagonal rows `(lower, diag, upper)` of the discrete `Delta_g`.
    fn laplacian_rows(&self) -> CyclicTridiagonal {
        let n = self.nodes();
        let h2 = self.dtheta * self.dtheta;
        let mut m = CyclicTridiagonal { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
        for i in 0..n {
            let s = self.sqrt_det[i] * h2;
            let cm = self.coef[(i + n - 1) % n];
            let cp = self.coef[i];
            m.lower[i] = cm / s;
            m.upper[i] = cp / s;
            m.diag[i] = -(cm + cp) / s;
        }
        m
    }
}

impl From<MetricSample> for MetricSlice {
    fn from(m: MetricSample) -> Self {
        let s = m.sqrt_det();
        Self::from_sqrt_det(m.time, m.dtheta, s, m.half_trace)
    }
}

/// A `T`-periodic family of metrics on the reference grid.
pub trait MetricFamily: Send + Sync {
    fn nodes(&self) -> usize;
    fn period(&self) -> f64;
    fn slice(&self, t: f64) -> Result<MetricSlice>;
}

/// Metric induced by a moving curve.
#[derive(Clone)]
pub struct EmbeddedMetric {
    pub chart: Arc<dyn Chart>,
    pub grid: ParameterGrid,
}

impl EmbeddedMetric {
    pub fn new(chart: Arc<dyn Chart>, grid: &ParameterGrid) -> Self {
        Self { chart, grid: grid.clone() }
    }
}

impl MetricFamily for EmbeddedMetric {
    fn nodes(&self) -> usize {
        self.grid.nodes()
    }

    fn period(&self) -> f64 {
        self.chart.period()
    }

    fn slice(&self, t: f64) -> Result<MetricSlice> {
        Ok(assemble_metric(self.chart.as_ref(), &self.grid, t)?.into())
    }
}

/// Stationary flat metric of a closed curve with the given length.
#[derive(Clone, Debug)]
pub struct FlatMetric {
    pub nodes: usize,
    pub period: f64,
    pub length: f64,
}

impl MetricFamily for FlatMetric {
    fn nodes(&self) -> usize {
        self.nodes
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn slice(&self, t: f64) -> Result<MetricSlice> {
        let dtheta = std::f64::consts::TAU / self.nodes as f64;
        let s = self.length / std::f64::consts::TAU;
        Ok(MetricSlice::from_sqrt_det(t, dtheta, vec![s; self.nodes], vec![0.0; self.nodes]))
    }
}

/// `g(T - t)`.
pub struct TimeReversed<F>(pub F);

impl<F: MetricFamily> MetricFamily for TimeReversed<F> {
    fn nodes(&self) -> usize {
        self.0.nodes()
    }

    fn period(&self) -> f64 {
        self.0.period()
    }

    fn slice(&self, t: f64) -> Result<MetricSlice> {
        let mut s = self.0.slice((self.period() - t).max(0.0))?;
        s.time = t;
        s.half_trace.iter_mut().for_each(|v| *v = -*v);
        Ok(s)
    }
}

impl<F: MetricFamily + ?Sized> MetricFamily for &F {
    fn nodes(&self) -> usize {
        (**self).nodes()
    }

    fn period(&self) -> f64 {
        (**self).period()
    }

    fn slice(&self, t: f64) -> Result<MetricSlice> {
        (**self).slice(t)
    }
}

impl<F: MetricFamily + ?Sized> MetricFamily for Arc<F> {
    fn nodes(&self) -> usize {
        (**self).nodes()
    }

    fn period(&self) -> f64 {
        (**self).period()
    }

    fn slice(&self, t: f64) -> Result<MetricSlice> {
        (**self).slice(t)
    }
}

struct Level {
    slice: MetricSlice,
    explicit: Vec<f64>,
    forcing: Vec<f64>,
}

/// Discrete solution operator with all per-level data precomputed.
pub struct Propagator {
    grid: ParameterGrid,
    scheme: Scheme,
    conservative: bool,
    levels: Vec<Level>,
}

impl Propagator {
    pub fn new(family: &dyn MetricFamily, config: &IvpConfig, forcing: &Forcing) -> Result<Self> {
        let grid = &config.grid;
        check_len(grid.nodes(), family.nodes())?;
        if (family.period() - grid.period()).abs() > 1e-12 * grid.period() {
            return Err(Error::Precondition(format!(
                "grid period {} differs from surface period {}",
                grid.period(),
                family.period()
            )));
        }
        let f = forcing.sample(grid)?;
        let mut levels = Vec::with_capacity(grid.steps() + 1);
        for (k, t) in grid.times().into_iter().enumerate() {
            levels.push(Level {
                slice: family.slice(t)?,
                explicit: config.zero_order.explicit_values(grid, t),
                forcing: f.levels[k].values.clone(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            scheme: config.scheme,
            conservative: config.zero_order.is_conservative(),
            levels,
        })
    }

    pub fn grid(&self) -> &ParameterGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn slice(&self, k: usize) -> &MetricSlice {
        &self.levels[k].slice
    }

    pub fn measure(&self, k: usize) -> WeightedMeasure {
        self.levels[k].slice.measure()
    }

    pub fn forcing(&self, k: usize) -> &[f64] {
        &self.levels[k].forcing
    }

    /// Advances `u` from `t_k` to `t_{k+1}`. With `homogeneous` the forcing is dropped.
    pub fn step(&self, k: usize, u: &[f64], homogeneous: bool) -> Result<Vec<f64>> {
        let n = self.grid.nodes();
        check_len(n, u.len())?;
        let dt = self.grid.time(k + 1) - self.grid.time(k);
        let (now, next) = (&self.levels[k], &self.levels[k + 1]);
        let ratio = |i: usize| {
            if self.conservative {
                now.slice.sqrt_det[i] / next.slice.sqrt_det[i]
            } else {
                1.0
            }
        };
        let f_now = |i: usize| if homogeneous { 0.0 } else { now.forcing[i] };
        let f_next = |i: usize| if homogeneous { 0.0 } else { next.forcing[i] };

        let mut m = next.slice.laplacian_rows();
        let rhs: Vec<f64> = match self.scheme {
            Scheme::BackwardEuler => {
                for i in 0..n {
                    m.lower[i] = -m.lower[i];
                    m.upper[i] = -m.upper[i];
                    m.diag[i] = 1.0 / dt + next.explicit[i] - m.diag[i];
                }
                (0..n).map(|i| ratio(i) * u[i] / dt - f_next(i)).collect()
            }
            Scheme::CrankNicolson => {
                for i in 0..n {
                    m.lower[i] *= -0.5;
                    m.upper[i] *= -0.5;
                    m.diag[i] = 1.0 / dt + 0.5 * next.explicit[i] - 0.5 * m.diag[i];
                }
                let lu = now.slice.laplacian(u);
                (0..n)
                    .map(|i| {
                        let explicit = (1.0 / dt - 0.5 * now.explicit[i]) * u[i] + 0.5 * lu[i] - 0.5 * f_now(i);
                        ratio(i) * explicit - 0.5 * f_next(i)
                    })
                    .collect()
            }
        };
        let out = m.solve(&rhs).ok_or(Error::SingularStep { level: k + 1 })?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { level: k + 1 });
        }
        Ok(out)
    }

    fn run(&self, u0: &ScalarField, homogeneous: bool, keep: bool) -> Result<Vec<ScalarField>> {
        u0.check_len(self.grid.nodes())?;
        if !u0.is_finite() {
            return Err(Error::NonFinite { level: 0 });
        }
        let mut out = Vec::with_capacity(if keep { self.grid.steps() + 1 } else { 1 });
        let mut u = u0.values.clone();
        if keep {
            out.push(ScalarField::new(u.clone(), 0.0));
        }
        for k in 0..self.grid.steps() {
            u = self.step(k, &u, homogeneous)?;
            if keep {
                out.push(ScalarField::new(u.clone(), self.grid.time(k + 1)));
            }
        }
        if !keep {
            out.push(ScalarField::new(u, self.grid.period()));
        }
        Ok(out)
    }

    /// `J0(u0)`: the full trajectory.
    pub fn solve_ivp(&self, u0: &ScalarField) -> Result<SpaceTimeField> {
        Ok(SpaceTimeField::new(self.run(u0, false, true)?))
    }

    pub fn solve_ivp_homogeneous(&self, u0: &ScalarField) -> Result<SpaceTimeField> {
        Ok(SpaceTimeField::new(self.run(u0, true, true)?))
    }

    /// `J(u0) = J0(u0)(., T)`.
    pub fn end_map(&self, u0: &ScalarField) -> Result<ScalarField> {
        Ok(self.run(u0, false, false)?.pop().unwrap())
    }

    /// End map of the flow with `f = 0`.
    pub fn end_map_homogeneous(&self, u0: &ScalarField) -> Result<ScalarField> {
        Ok(self.run(u0, true, false)?.pop().unwrap())
    }
}

pub fn solve_ivp(
    family: &dyn MetricFamily,
    config: &IvpConfig,
    forcing: &Forcing,
    u0: &ScalarField,
) -> Result<SpaceTimeField> {
    Propagator::new(family, config, forcing)?.solve_ivp(u0)
}

pub fn end_map(
    family: &dyn MetricFamily,
    config: &IvpConfig,
    forcing: &Forcing,
    u0: &ScalarField,
) -> Result<ScalarField> {
    Propagator::new(family, config, forcing)?.end_map(u0)
}

/// Solves `Delta_g phi + phi_t = f` backwards from `phi(., T) = terminal` by
/// running the reversed metric family forward and flipping the result.
pub fn adjoint_terminal_solve(
    family: &dyn MetricFamily,
    grid: &ParameterGrid,
    scheme: Scheme,
    forcing: &Forcing,
    terminal: &ScalarField,
) -> Result<SpaceTimeField> {
    let reversed = TimeReversed(family);
    let config = IvpConfig::new(grid.clone(), scheme, ZeroOrder::Zero);
    let f = forcing.time_reversed(grid)?;
    let start = ScalarField::new(terminal.values.clone(), 0.0);
    Ok(solve_ivp(&reversed, &config, &f, &start)?.time_reversed())
}

/// Space-time integrals `(I1, I2)` and `|I1 - I2|` of the duality identity
/// `int int (Delta u - 1/2 tr u - u_t) phi = int int u (Delta phi + phi_t) - [int u phi do]_0^T`.
#[derive(Clone, Copy, Debug)]
pub struct DualityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Time derivative at every level: central inside, second-order one-sided at the ends.
pub(crate) fn time_derivative(field: &SpaceTimeField, dt: f64) -> Vec<Vec<f64>> {
    let m = field.steps();
    let v = |k: usize| &field.levels[k].values;
    (0..=m)
        .map(|k| {
            let n = v(k).len();
            (0..n)
                .map(|i| match k {
                    0 => (-3.0 * v(0)[i] + 4.0 * v(1)[i] - v(2)[i]) / (2.0 * dt),
                    k if k == m => (3.0 * v(m)[i] - 4.0 * v(m - 1)[i] + v(m - 2)[i]) / (2.0 * dt),
                    _ => (v(k + 1)[i] - v(k - 1)[i]) / (2.0 * dt),
                })
                .collect()
        })
        .collect()
}

pub(crate) fn trapezoid_weight(k: usize, steps: usize, dt: f64) -> f64 {
    if k == 0 || k == steps {
        0.5 * dt
    } else {
        dt
    }
}

pub fn duality_check(
    family: &dyn MetricFamily,
    grid: &ParameterGrid,
    u: &SpaceTimeField,
    phi: &SpaceTimeField,
) -> Result<DualityResidual> {
    let m = grid.steps();
    check_len(m + 1, u.levels.len())?;
    check_len(m + 1, phi.levels.len())?;
    let dt = grid.dt();
    let ut = time_derivative(u, dt);
    let pt = time_derivative(phi, dt);
    let (mut lhs, mut rhs) = (0.0, 0.0);
    let mut boundary = [0.0; 2];
    for k in 0..=m {
        let slice = family.slice(grid.time(k))?;
        let w = slice.measure().weights;
        let uk = &u.levels[k].values;
        let pk = &phi.levels[k].values;
        let lu = slice.laplacian(uk);
        let lp = slice.laplacian(pk);
        let tw = trapezoid_weight(k, m, dt);
        for i in 0..grid.nodes() {
            let op_u = lu[i] - slice.half_trace[i] * uk[i] - ut[k][i];
            lhs += tw * w[i] * op_u * pk[i];
            rhs += tw * w[i] * uk[i] * (lp[i] + pt[k][i]);
        }
        if k == 0 || k == m {
            boundary[usize::from(k == m)] = (0..grid.nodes()).map(|i| w[i] * uk[i] * pk[i]).sum();
        }
    }
    rhs -= boundary[1] - boundary[0];
    Ok(DualityResidual { lhs, rhs, residual: (lhs - rhs).abs() })
}
