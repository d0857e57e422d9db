//! Discrete Hölder norms, mass ledgers and other quantitative checks.
//!
//! Every Hölder quantity here is a sup over a finite set of grid-point pairs and
//! therefore a lower bound of the continuum value. Spatial distances on the
//! curve are chart arc lengths of the reference curve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::{time_derivative, MetricFamily, Propagator, Scheme, ZeroOrder};
use crate::grid::{check_len, periodic_derivative, ParameterGrid, ScalarField, SpaceTimeField};
use crate::narrowband::Band;
use crate::periodic::space_time_integral;
use crate::surface::{Chart, Vec2};

/// Pair count above which pairs are sampled instead of enumerated.
pub const DEFAULT_PAIR_BUDGET: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Arc-length data of the reference curve on the parameter grid.
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    pub dtheta: f64,
    pub speed: Vec<f64>,
    pub tangent: Vec<Vec2>,
    /// Cumulative arc length at each node, starting at 0.
    pub arc: Vec<f64>,
    pub length: f64,
}

impl CurveGeometry {
    /// Geometry of `Gamma(0)`, with arc length from the trapezoid rule on `|X_theta|`.
    pub fn from_chart(chart: &dyn Chart, grid: &ParameterGrid) -> Self {
        let n = grid.nodes();
        let d: Vec<Vec2> = (0..n).map(|i| chart.d_theta(grid.theta(i), 0.0)).collect();
        let speed: Vec<f64> = d.iter().map(|v| v.norm()).collect();
        let tangent = d.iter().zip(&speed).map(|(v, s)| v / *s).collect();
        let dtheta = grid.dtheta();
        let mut arc = Vec::with_capacity(n);
        let mut s = 0.0;
        for i in 0..n {
            arc.push(s);
            s += 0.5 * dtheta * (speed[i] + speed[(i + 1) % n]);
        }
        CurveGeometry { dtheta, speed, tangent, arc, length: s }
    }

    pub fn nodes(&self) -> usize {
        self.speed.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let d = (self.arc[i] - self.arc[j]).abs();
        d.min(self.length - d)
    }

    /// `d f / ds` at each node.
    pub fn arc_derivative(&self, values: &[f64]) -> Vec<f64> {
        periodic_derivative(values, self.dtheta).iter().zip(&self.speed).map(|(d, s)| d / s).collect()
    }
}

/// Sup-norm, Hölder coefficient and time Hölder coefficient of one field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SeminormEstimate {
    pub sup_norm: f64,
    pub holder_coefficient: f64,
    pub time_holder: f64,
}

impl SeminormEstimate {
    /// `|f|_alpha = |f|_0 + H_alpha(f)`.
    pub fn alpha_norm(&self) -> f64 {
        self.sup_norm + self.holder_coefficient
    }
}

#[derive(Clone, Debug)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub field: SeminormEstimate,
    pub gradient: SeminormEstimate,
    pub hessian: SeminormEstimate,
    pub time_derivative: SeminormEstimate,
}

impl HolderEstimate {
    pub fn sup_norm(&self) -> f64 {
        self.field.sup_norm
    }

    pub fn holder_coefficient(&self) -> f64 {
        self.field.holder_coefficient
    }

    pub fn time_holder(&self) -> f64 {
        self.field.time_holder
    }

    pub fn norm_alpha(&self) -> f64 {
        self.field.alpha_norm()
    }

    pub fn norm_1_alpha(&self) -> f64 {
        self.field.sup_norm + self.field.time_holder + self.gradient.alpha_norm()
    }

    pub fn norm_2_alpha(&self) -> f64 {
        self.field.sup_norm
            + self.gradient.sup_norm
            + self.gradient.time_holder
            + self.hessian.alpha_norm()
            + self.time_derivative.alpha_norm()
    }
}

/// Sup of `quotient(i, j)` over pairs `i < j < count`; all pairs when there are at
/// most `budget`, otherwise `budget` uniformly sampled pairs.
fn pair_sup(count: usize, budget: usize, seed: u64, quotient: impl Fn(usize, usize) -> f64) -> f64 {
    if count < 2 {
        return 0.0;
    }
    let total = count * (count - 1) / 2;
    let mut best = 0.0f64;
    if total <= budget {
        for i in 0..count {
            for j in i + 1..count {
                best = best.max(quotient(i, j));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..budget {
            let i = rng.random_range(0..count);
            let mut j = rng.random_range(0..count - 1);
            if j >= i {
                j += 1;
            }
            best = best.max(quotient(i, j));
        }
    }
    best
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Estimator over a space-time lattice of vector values; `values[k][i]` is the
/// value at node `i` of level `k`.
fn seminorms(
    values: &[Vec<Vec<f64>>],
    times: &[f64],
    space: &dyn Fn(usize, usize) -> f64,
    alpha: f64,
    budget: usize,
    seed: u64,
) -> SeminormEstimate {
    let levels = values.len();
    let nodes = values.first().map_or(0, Vec::len);
    let sup_norm = values.iter().flatten().map(|v| distance(v, &vec![0.0; v.len()])).fold(0.0, f64::max);
    let holder_coefficient = pair_sup(levels * nodes, budget, seed, |p, q| {
        let (k, i, l, j) = (p / nodes, p % nodes, q / nodes, q % nodes);
        let dist = space(i, j).max((times[k] - times[l]).abs().sqrt());
        if dist == 0.0 {
            return 0.0;
        }
        distance(&values[k][i], &values[l][j]) / dist.powf(alpha)
    });
    let time_holder = pair_sup(levels, budget / nodes.max(1) + 1, seed ^ 1, |k, l| {
        let dt = (times[k] - times[l]).abs();
        if dt == 0.0 {
            return 0.0;
        }
        let diff = (0..nodes).map(|i| distance(&values[k][i], &values[l][i])).fold(0.0, f64::max);
        diff / dt.powf(0.5 * (1.0 + alpha))
    });
    SeminormEstimate { sup_norm, holder_coefficient, time_holder }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

/// Lower-bound estimates of the Hölder norms of a space-time field on the curve.
pub fn holder_estimate(
    field: &SpaceTimeField,
    geometry: &CurveGeometry,
    alpha: f64,
    budget: usize,
    seed: u64,
) -> Result<HolderEstimate> {
    check_alpha(alpha)?;
    for level in &field.levels {
        level.check_len(geometry.nodes())?;
    }
    let times = field.times();
    let space = |i: usize, j: usize| geometry.distance(i, j);
    let scalar = |rows: Vec<Vec<f64>>| -> Vec<Vec<Vec<f64>>> {
        rows.into_iter().map(|r| r.into_iter().map(|v| vec![v]).collect()).collect()
    };
    let values: Vec<Vec<f64>> = field.levels.iter().map(|l| l.values.clone()).collect();
    let first: Vec<Vec<f64>> = values.iter().map(|v| geometry.arc_derivative(v)).collect();
    let gradient: Vec<Vec<Vec<f64>>> = first
        .iter()
        .map(|row| row.iter().zip(&geometry.tangent).map(|(d, t)| vec![d * t.x, d * t.y]).collect())
        .collect();
    let second: Vec<Vec<f64>> = first.iter().map(|v| geometry.arc_derivative(v)).collect();
    let dt: Vec<Vec<f64>> = if field.steps() >= 2 {
        time_derivative(field, times[1] - times[0])
    } else {
        vec![vec![0.0; geometry.nodes()]; field.levels.len()]
    };
    Ok(HolderEstimate {
        alpha,
        field: seminorms(&scalar(values), &times, &space, alpha, budget, seed),
        gradient: seminorms(&gradient, &times, &space, alpha, budget, seed),
        hessian: seminorms(&scalar(second), &times, &space, alpha, budget, seed),
        time_derivative: seminorms(&scalar(dt), &times, &space, alpha, budget, seed),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct InterpolationRow {
    pub epsilon: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|f|_alpha <= c eps^(1-alpha) |f|_(2+alpha) + C(eps) |f|_0` with `c = 1` and
/// `C(eps) = 2 / eps^alpha`.
pub fn interpolation_check(
    field: &SpaceTimeField,
    geometry: &CurveGeometry,
    alpha: f64,
    epsilons: &[f64],
    budget: usize,
    seed: u64,
) -> Result<Vec<InterpolationRow>> {
    let est = holder_estimate(field, geometry, alpha, budget, seed)?;
    Ok(epsilons
        .iter()
        .map(|&eps| {
            let lhs = est.norm_alpha();
            let rhs = eps.powf(1.0 - alpha) * est.norm_2_alpha() + 2.0 / eps.powf(alpha) * est.sup_norm();
            InterpolationRow { epsilon: eps, lhs, rhs, holds: lhs <= rhs }
        })
        .collect())
}

#[derive(Clone, Copy, Debug)]
pub struct NormEquivalence {
    /// `|u^l|_0 / |u|_0`.
    pub sup_ratio: f64,
    /// `|u^l|_alpha / |u|_alpha`.
    pub alpha_ratio: f64,
    /// `|u^l|_(1+alpha) / |u|_(1+alpha)` for static data.
    pub first_order_ratio: f64,
    pub bound: f64,
}

impl NormEquivalence {
    pub fn within_bounds(&self) -> bool {
        [self.sup_ratio, self.alpha_ratio, self.first_order_ratio]
            .iter()
            .all(|r| *r >= 1.0 / self.bound && *r <= self.bound)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else {
        a / b
    }
}

/// Compares Hölder estimates of `u` on the curve with those of its lift on the band.
pub fn norm_equivalence_check(
    u: &ScalarField,
    geometry: &CurveGeometry,
    band: &Band,
    alpha: f64,
    budget: usize,
    seed: u64,
) -> Result<NormEquivalence> {
    check_alpha(alpha)?;
    u.check_len(geometry.nodes())?;
    let surface = holder_estimate(&SpaceTimeField::new(vec![u.clone()]), geometry, alpha, budget, seed)?;

    let lifted = band.lift_field(u);
    let active: Vec<usize> = band.grid.active_nodes().collect();
    let points: Vec<Vec2> = active.iter().map(|&k| band.grid.position(k)).collect();
    let space = |i: usize, j: usize| (points[i] - points[j]).norm();
    let values = vec![active.iter().map(|&k| vec![lifted[k]]).collect::<Vec<_>>()];
    let mut gradient = Vec::with_capacity(active.len());
    for &k in &active {
        let g = band.gradient(&lifted, k).ok_or_else(|| Error::BandTooThin("gradient stencil".into()))?;
        gradient.push(vec![g.x, g.y]);
    }
    let times = [0.0];
    let lift_est = seminorms(&values, &times, &space, alpha, budget, seed);
    let lift_grad = seminorms(&[gradient], &times, &space, alpha, budget, seed);

    Ok(NormEquivalence {
        sup_ratio: ratio(lift_est.sup_norm, surface.field.sup_norm),
        alpha_ratio: ratio(lift_est.alpha_norm(), surface.field.alpha_norm()),
        first_order_ratio: ratio(
            lift_est.sup_norm + lift_grad.alpha_norm(),
            surface.field.sup_norm + surface.gradient.alpha_norm(),
        ),
        bound: 10.0,
    })
}

#[derive(Clone, Debug, Default)]
pub struct MassSeries {
    pub mass: Vec<f64>,
    pub forcing_integral: Vec<f64>,
    /// `m_(k+1) - m_k + dt * (forcing integral over the step)`, with the step
    /// quadrature matching the scheme.
    pub defect: Vec<f64>,
}

impl MassSeries {
    pub fn max_defect(&self) -> f64 {
        self.defect.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,mass,forcing_integral,defect\n");
        for k in 0..self.mass.len() {
            let defect = if k == 0 { 0.0 } else { self.defect[k - 1] };
            out.push_str(&format!("{k},{:.17e},{:.17e},{:.17e}\n", self.mass[k], self.forcing_integral[k], defect));
        }
        out
    }
}

/// Mass `int u do` per level and its balance against the forcing.
pub fn mass_ledger(trajectory: &SpaceTimeField, propagator: &Propagator) -> Result<MassSeries> {
    let grid = propagator.grid();
    check_len(grid.steps() + 1, trajectory.levels.len())?;
    let mut series = MassSeries::default();
    for k in 0..=grid.steps() {
        let w = propagator.measure(k);
        series.mass.push(w.integrate(&trajectory.levels[k].values));
        series.forcing_integral.push(w.integrate(propagator.forcing(k)));
    }
    for k in 0..grid.steps() {
        let dt = grid.time(k + 1) - grid.time(k);
        let (f0, f1) = (series.forcing_integral[k], series.forcing_integral[k + 1]);
        let step = match propagator.scheme() {
            Scheme::BackwardEuler => f1,
            Scheme::CrankNicolson => 0.5 * (f0 + f1),
        };
        series.defect.push(series.mass[k + 1] - series.mass[k] + dt * step);
    }
    Ok(series)
}

/// `int_0^T int f do(t) dt` with trapezoid rules in both variables.
pub fn compatibility_check(f: &SpaceTimeField, family: &dyn MetricFamily, grid: &ParameterGrid) -> Result<f64> {
    check_len(grid.steps() + 1, f.levels.len())?;
    space_time_integral(family, grid, f)
}

#[derive(Clone, Debug)]
pub struct MaxPrincipleReport {
    pub monotone: bool,
    pub first_violation: Option<usize>,
    pub maxima: Vec<f64>,
}

/// Checks that the node maximum never increases; with a nonnegative zero-order
/// term the bound is `max(max u_k, 0)`.
pub fn max_principle_monitor(trajectory: &SpaceTimeField, zero_order: &ZeroOrder) -> MaxPrincipleReport {
    let maxima: Vec<f64> = trajectory.levels.iter().map(ScalarField::max).collect();
    let zero = matches!(zero_order, ZeroOrder::Zero);
    let first_violation = (1..maxima.len()).find(|&k| {
        let bound = if zero { maxima[k - 1] } else { maxima[k - 1].max(0.0) };
        maxima[k] > bound + 1e-13 * bound.abs().max(1.0)
    });
    MaxPrincipleReport { monotone: first_violation.is_none(), first_violation, maxima }
}
