//! Cartesian metric `G` on the reference curve, the Laplace-Beltrami operator
//! `Delta_g(t)` in local-coordinate divergence form, and weighted measures.
//!
//! With `g = |X_theta(theta, t)|^2` and `g~ = |X_theta(theta, 0)|^2`, the metric
//! at a node of `M` is `G = (g / g~) tau_M tau_M^T + nu_M nu_M^T`.

use crate::error::{Error, Result};
use crate::grid::{check_len, max_abs_diff, periodic_derivative, ParameterGrid, ScalarField};
use crate::surface::{build_frame, check_time, Chart, GeometryFrame, Mat2, Vec2};

/// Largest admissible condition number of `G`.
pub const MAX_CONDITION: f64 = 1e12;

/// Metric data at every node of the reference grid at one time.
#[derive(Clone, Debug)]
pub struct MetricSample {
    pub time: f64,
    pub dtheta: f64,
    pub g: Vec<Mat2>,
    pub g_inv: Vec<Mat2>,
    pub det_g: Vec<f64>,
    pub g_t: Vec<Mat2>,
    /// Local first fundamental form `g_11 = X_theta . X_theta`.
    pub g_local: Vec<f64>,
    pub g_local_inv: Vec<f64>,
    /// `g~` of the reference chart at `t = 0`.
    pub g_reference: Vec<f64>,
    /// `1/2 G^ab G_t,ab` per node.
    pub half_trace: Vec<f64>,
    pub nu_reference: Vec<Vec2>,
}

impl MetricSample {
    pub fn nodes(&self) -> usize {
        self.g_local.len()
    }

    /// `sqrt(det g_local)` per node.
    pub fn sqrt_det(&self) -> Vec<f64> {
        self.g_local.iter().map(|g| g.sqrt()).collect()
    }

    /// Half-node coefficients `(sqrt(det g) g^11)_{i+1/2}` as arithmetic means.
    pub fn half_node_coefficients(&self) -> Vec<f64> {
        half_node_coefficients(&self.sqrt_det())
    }

    pub fn measure(&self) -> WeightedMeasure {
        WeightedMeasure::from_sqrt_det(&self.sqrt_det(), self.dtheta)
    }

    /// `max |G nu - nu|`, `max |G^-1 nu - nu|` over nodes.
    pub fn normal_invariance(&self) -> f64 {
        self.nu_reference
            .iter()
            .zip(self.g.iter().zip(&self.g_inv))
            .map(|(nu, (g, gi))| (g * nu - nu).norm().max((gi * nu - nu).norm()))
            .fold(0.0, f64::max)
    }

    /// `max |det G - det g_local / g~|`.
    pub fn determinant_consistency(&self) -> f64 {
        (0..self.nodes()).map(|i| (self.det_g[i] - self.g_local[i] / self.g_reference[i]).abs()).fold(0.0, f64::max)
    }
}

pub(crate) fn half_node_coefficients(sqrt_det: &[f64]) -> Vec<f64> {
    let n = sqrt_det.len();
    (0..n).map(|i| 0.5 * (1.0 / sqrt_det[i] + 1.0 / sqrt_det[(i + 1) % n])).collect()
}

pub fn assemble_metric(surface: &dyn Chart, grid: &ParameterGrid, t: f64) -> Result<MetricSample> {
    check_time(t, surface.period())?;
    let n = grid.nodes();
    let mut out = MetricSample {
        time: t,
        dtheta: grid.dtheta(),
        g: Vec::with_capacity(n),
        g_inv: Vec::with_capacity(n),
        det_g: Vec::with_capacity(n),
        g_t: Vec::with_capacity(n),
        g_local: Vec::with_capacity(n),
        g_local_inv: Vec::with_capacity(n),
        g_reference: Vec::with_capacity(n),
        half_trace: Vec::with_capacity(n),
        nu_reference: Vec::with_capacity(n),
    };
    let reference = build_frame(surface, grid, 0.0)?;
    let current = build_frame(surface, grid, t)?;
    for i in 0..n {
        let theta = grid.theta(i);
        let y = reference.x_theta[i];
        let x = current.x_theta[i];
        let g_ref = y.norm_squared();
        let g = x.norm_squared();
        let stretch = g / g_ref;
        let condition = stretch.max(1.0 / stretch);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::DegenerateMetric { theta, t, condition });
        }
        let tau = reference.tangent[i];
        let nu = reference.nu[i];
        let tt = tau * tau.transpose();
        let nn = nu * nu.transpose();
        let rate = x.dot(&current.x_theta_t[i]);
        out.g.push(stretch * tt + nn);
        out.g_inv.push(tt / stretch + nn);
        out.det_g.push(stretch);
        out.g_t.push((2.0 * rate / g_ref) * tt);
        out.g_local.push(g);
        out.g_local_inv.push(1.0 / g);
        out.g_reference.push(g_ref);
        out.half_trace.push(rate / g);
        out.nu_reference.push(nu);
    }
    Ok(out)
}

/// Flux-form `(1/s_i) [c_{i+1/2}(U_{i+1}-U_i) - c_{i-1/2}(U_i-U_{i-1})] / dtheta^2`.
pub(crate) fn flux_laplacian(sqrt_det: &[f64], coef: &[f64], dtheta: f64, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h2 = dtheta * dtheta;
    (0..n)
        .map(|i| {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            (coef[i] * (u[ip] - u[i]) - coef[im] * (u[i] - u[im])) / (sqrt_det[i] * h2)
        })
        .collect()
}

pub fn laplace_beltrami_apply(metric: &MetricSample, field: &ScalarField) -> Result<ScalarField> {
    check_len(metric.nodes(), field.len())?;
    let s = metric.sqrt_det();
    let c = half_node_coefficients(&s);
    Ok(ScalarField::new(flux_laplacian(&s, &c, metric.dtheta, &field.values), metric.time))
}

/// Periodic trapezoid weights `sqrt(det g) dtheta`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedMeasure {
    pub weights: Vec<f64>,
    pub total: f64,
}

impl WeightedMeasure {
    pub fn from_sqrt_det(sqrt_det: &[f64], dtheta: f64) -> Self {
        let weights: Vec<f64> = sqrt_det.iter().map(|s| s * dtheta).collect();
        let total = weights.iter().sum();
        Self { weights, total }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn mean(&self, values: &[f64]) -> f64 {
        self.integrate(values) / self.total
    }
}

/// `(mean, mass)` of a field.
pub fn mean_and_mass(measure: &WeightedMeasure, field: &ScalarField) -> Result<(f64, f64)> {
    check_len(measure.weights.len(), field.len())?;
    let mass = measure.integrate(&field.values);
    Ok((mass / measure.total, mass))
}

/// Both sides of `1/2 G^ab G_t,ab = (div_Gamma v) o X` per node.
#[derive(Clone, Debug)]
pub struct TraceIdentity {
    pub metric_side: Vec<f64>,
    pub divergence_side: Vec<f64>,
    pub max_difference: f64,
}

/// Tangential divergence of the velocity from the exact mixed derivative
/// `X_theta_t`: `sum_eta tau_eta dv_eta/dtheta / |X_theta|`.
pub fn trace_identity(metric: &MetricSample, frame: &GeometryFrame) -> Result<TraceIdentity> {
    check_len(metric.nodes(), frame.nodes())?;
    let divergence_side: Vec<f64> =
        (0..frame.nodes()).map(|i| frame.tangent[i].dot(&frame.x_theta_t[i]) / frame.speed[i]).collect();
    Ok(TraceIdentity {
        max_difference: max_abs_diff(&metric.half_trace, &divergence_side),
        metric_side: metric.half_trace.clone(),
        divergence_side,
    })
}

/// Tangential divergence of the velocity from central differences of its components.
pub fn velocity_divergence_discrete(frame: &GeometryFrame) -> Vec<f64> {
    let vx: Vec<f64> = frame.velocity.iter().map(|v| v.x).collect();
    let vy: Vec<f64> = frame.velocity.iter().map(|v| v.y).collect();
    let dx = periodic_derivative(&vx, frame.dtheta);
    let dy = periodic_derivative(&vy, frame.dtheta);
    (0..frame.nodes()).map(|i| (frame.tangent[i].x * dx[i] + frame.tangent[i].y * dy[i]) / frame.speed[i]).collect()
}

/// `|int G^-1 grad u . grad w do + int u Delta_g w do|`.
///
/// The gradient pairing is evaluated at half nodes, where
/// `G^-1 grad_M u . grad_M w do = c_{i+1/2} (U_{i+1}-U_i)(W_{i+1}-W_i) / dtheta`.
pub fn greens_formula_check(metric: &MetricSample, u: &ScalarField, w: &ScalarField) -> Result<f64> {
    let n = metric.nodes();
    check_len(n, u.len())?;
    check_len(n, w.len())?;
    let s = metric.sqrt_det();
    let c = half_node_coefficients(&s);
    let measure = WeightedMeasure::from_sqrt_det(&s, metric.dtheta);
    let lap_w = flux_laplacian(&s, &c, metric.dtheta, &w.values);
    let gradient_term: f64 = (0..n)
        .map(|i| {
            let ip = (i + 1) % n;
            c[i] * (u.values[ip] - u.values[i]) * (w.values[ip] - w.values[i]) / metric.dtheta
        })
        .sum();
    let lap_term: f64 = (0..n).map(|i| measure.weights[i] * u.values[i] * lap_w[i]).sum();
    Ok((gradient_term + lap_term).abs())
}

/// Quadratic polynomial `c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2` on the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientPolynomial2(pub [f64; 6]);

impl AmbientPolynomial2 {
    pub const X: Self = Self([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    pub const XY: Self = Self([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

    pub fn value(&self, p: &Vec2) -> f64 {
        let c = &self.0;
        c[0] + c[1] * p.x + c[2] * p.y + c[3] * p.x * p.x + c[4] * p.x * p.y + c[5] * p.y * p.y
    }

    pub fn gradient(&self, p: &Vec2) -> Vec2 {
        let c = &self.0;
        Vec2::new(c[1] + 2.0 * c[3] * p.x + c[4] * p.y, c[2] + c[4] * p.x + 2.0 * c[5] * p.y)
    }

    pub fn hessian(&self) -> Mat2 {
        let c = &self.0;
        Mat2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5])
    }

    /// Surface Laplacian on a curve: `tau^T Hess tau - kappa nu . grad u`.
    pub fn surface_laplacian(&self, p: &Vec2, tau: &Vec2, nu: &Vec2, kappa: f64) -> f64 {
        tau.dot(&(self.hessian() * tau)) - kappa * nu.dot(&self.gradient(p))
    }
}

/// Max node difference between `Delta_g(t)` applied to `u o X` and the
/// closed-form ambient surface Laplacian of `u` on `Gamma(t)`.
pub fn pullback_identity_check(
    surface: &dyn Chart,
    grid: &ParameterGrid,
    t: f64,
    u: &AmbientPolynomial2,
) -> Result<f64> {
    let metric = assemble_metric(surface, grid, t)?;
    let frame = build_frame(surface, grid, t)?;
    let pulled = ScalarField::new(frame.position.iter().map(|p| u.value(p)).collect(), t);
    let lap = laplace_beltrami_apply(&metric, &pulled)?;
    let exact: Vec<f64> = (0..grid.nodes())
        .map(|i| u.surface_laplacian(&frame.position[i], &frame.tangent[i], &frame.nu[i], frame.curvature[i]))
        .collect();
    Ok(max_abs_diff(&lap.values, &exact))
}

/// `|d/dt int f do(t) - int (f_t + 1/2 tr f) do(t)|` at time `t`, with the
/// derivative of the integral taken as a centered difference of width `2 dt`.
pub fn transport_formula_check(
    surface: &dyn Chart,
    grid: &ParameterGrid,
    t: f64,
    dt: f64,
    f: impl Fn(f64, f64) -> f64,
    f_t: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let integral = |s: f64| -> Result<f64> {
        let m = assemble_metric(surface, grid, s)?;
        Ok(m.measure().integrate(&grid.sample(s, |th| f(th, s)).values))
    };
    let lhs = (integral(t + dt)? - integral(t - dt)?) / (2.0 * dt);
    let m = assemble_metric(surface, grid, t)?;
    let thetas = grid.thetas();
    let integrand: Vec<f64> =
        (0..grid.nodes()).map(|i| f_t(thetas[i], t) + m.half_trace[i] * f(thetas[i], t)).collect();
    Ok((lhs - m.measure().integrate(&integrand)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceFamily;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn families() -> Vec<SurfaceFamily> {
        vec![
            SurfaceFamily::unit_circle(),
            SurfaceFamily::breathing(0.3, 1.0),
            SurfaceFamily::RotatingEllipse { semi_major: 1.5, semi_minor: 1.0, turns: 1, period: 1.0 },
            SurfaceFamily::Bean { amplitude: 0.6, period: 1.0 },
        ]
    }

    #[test]
    fn identity_embedding_gives_identity_metric() {
        let grid = ParameterGrid::new(32, 4, 1.0).unwrap();
        let m = assemble_metric(&SurfaceFamily::unit_circle(), &grid, 0.4).unwrap();
        for i in 0..32 {
            assert_abs_diff_eq!(m.g[i], Mat2::identity(), epsilon = 1e-14);
            assert_abs_diff_eq!(m.det_g[i], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn breathing_metric_matches_radius() {
        let a = 0.25;
        let fam = SurfaceFamily::breathing(a, 2.0);
        let grid = ParameterGrid::new(16, 4, 2.0).unwrap();
        let t = 0.3;
        let r = 1.0 + a * (PI * t).sin();
        let rp = a * PI * (PI * t).cos();
        let m = assemble_metric(&fam, &grid, t).unwrap();
        for i in 0..16 {
            assert_abs_diff_eq!(m.g_local[i], r * r, epsilon = 1e-14);
            assert_abs_diff_eq!(m.det_g[i], r * r, epsilon = 1e-14);
            assert_abs_diff_eq!(m.half_trace[i], rp / r, epsilon = 1e-14);
        }
    }

    #[test]
    fn metric_invariants_hold_on_all_families() {
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        for fam in families() {
            for &t in &[0.0, 0.37, 1.0] {
                let m = assemble_metric(&fam, &grid, t).unwrap();
                assert!(m.normal_invariance() <= 1e-12);
                assert!(m.determinant_consistency() <= 1e-10);
                for i in 0..64 {
                    assert!((m.g[i] * m.g_inv[i] - Mat2::identity()).abs().max() <= 1e-12);
                    assert!((m.g[i] - m.g[i].transpose()).abs().max() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_rejected() {
        use crate::surface::FiniteDifferenceChart;
        // speed collapses by a factor 1e-7 at t = 1/2: condition 1e14
        let chart = FiniteDifferenceChart::new(1.0, |th, t| {
            let s = 1.0 - (1.0 - 1e-7) * (PI * t).sin();
            Vec2::new(s * th.cos(), s * th.sin())
        });
        let grid = ParameterGrid::new(8, 4, 1.0).unwrap();
        assert!(matches!(assemble_metric(&chart, &grid, 0.5), Err(Error::DegenerateMetric { .. })));
    }

    #[test]
    fn laplacian_of_cos_on_unit_circle() {
        let grid = ParameterGrid::new(256, 4, 1.0).unwrap();
        let m = assemble_metric(&SurfaceFamily::unit_circle(), &grid, 0.0).unwrap();
        let lap = laplace_beltrami_apply(&m, &grid.sample(0.0, f64::cos)).unwrap();
        let err = max_abs_diff(&lap.values, &grid.sample(0.0, |t| -t.cos()).values);
        assert!(err <= 2e-4, "{err}");
    }

    #[test]
    fn laplacian_scales_with_radius() {
        let grid = ParameterGrid::new(256, 4, 1.0).unwrap();
        let fam = SurfaceFamily::Circle { radius: 2.0, period: 1.0 };
        let m = assemble_metric(&fam, &grid, 0.0).unwrap();
        let lap = laplace_beltrami_apply(&m, &grid.sample(0.0, f64::cos)).unwrap();
        let err = max_abs_diff(&lap.values, &grid.sample(0.0, |t| -0.25 * t.cos()).values);
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn laplacian_annihilates_constants_and_has_zero_mass() {
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        for fam in families() {
            let m = assemble_metric(&fam, &grid, 0.3).unwrap();
            let lap = laplace_beltrami_apply(&m, &ScalarField::constant(64, 3.5, 0.3)).unwrap();
            assert!(lap.values.iter().all(|v| *v == 0.0));
            let u = grid.sample(0.3, |t| (2.0 * t).sin() + 0.3 * (5.0 * t).cos());
            let lu = laplace_beltrami_apply(&m, &u).unwrap();
            let total = m.measure().integrate(&lu.values);
            assert!(total.abs() <= 1e-11, "{fam}: {total}");
        }
    }

    #[test]
    fn mean_and_mass_oracles() {
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        let m = assemble_metric(&SurfaceFamily::unit_circle(), &grid, 0.0).unwrap();
        let (mean, mass) = mean_and_mass(&m.measure(), &ScalarField::constant(64, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(mass, TAU, epsilon = 1e-10);
        let (mean, mass) = mean_and_mass(&m.measure(), &grid.sample(0.0, f64::cos)).unwrap();
        assert!(mean.abs() <= 1e-15 && mass.abs() <= 1e-15);

        let fam = SurfaceFamily::breathing(0.3, 1.0);
        let t = 0.2;
        let m = assemble_metric(&fam, &grid, t).unwrap();
        let (_, mass) = mean_and_mass(&m.measure(), &ScalarField::constant(64, 2.0, t)).unwrap();
        let r = fam.breathing_radius(t).unwrap();
        assert_abs_diff_eq!(mass, TAU * r * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_identity_on_families() {
        let grid = ParameterGrid::new(128, 4, 1.0).unwrap();
        for fam in families() {
            let t = 0.29;
            let m = assemble_metric(&fam, &grid, t).unwrap();
            let frame = build_frame(&fam, &grid, t).unwrap();
            let id = trace_identity(&m, &frame).unwrap();
            assert!(id.max_difference <= 1e-10);
            let discrete = velocity_divergence_discrete(&frame);
            assert!(max_abs_diff(&discrete, &id.metric_side) <= 1e-2);
        }
        let grid = ParameterGrid::new(16, 4, 1.0).unwrap();
        let rot = SurfaceFamily::RotatingEllipse { semi_major: 2.0, semi_minor: 1.0, turns: 2, period: 1.0 };
        let m = assemble_metric(&rot, &grid, 0.4).unwrap();
        assert!(m.half_trace.iter().all(|v| v.abs() <= 1e-13));
    }

    #[test]
    fn greens_formula_is_exact_for_the_flux_form() {
        for &n in &[16, 64, 256] {
            let grid = ParameterGrid::new(n, 4, 1.0).unwrap();
            let m = assemble_metric(&SurfaceFamily::unit_circle(), &grid, 0.0).unwrap();
            let r = greens_formula_check(&m, &grid.sample(0.0, f64::cos), &grid.sample(0.0, f64::sin)).unwrap();
            assert!(r <= 1e-10);
            let c = ScalarField::constant(n, 2.0, 0.0);
            assert!(greens_formula_check(&m, &c, &grid.sample(0.0, f64::sin)).unwrap() <= 1e-12);
        }
        let grid = ParameterGrid::new(128, 3 * 4, 1.0).unwrap();
        let m = assemble_metric(&SurfaceFamily::breathing(0.3, 1.0), &grid, 1.0 / 3.0).unwrap();
        let u = grid.sample(0.0, |t| (2.0 * t).cos());
        assert!(greens_formula_check(&m, &u, &u).unwrap() <= 1e-10);
    }

    #[test]
    fn pullback_converges_at_second_order() {
        let fam = SurfaceFamily::breathing(0.3, 1.0);
        let e = |n| {
            pullback_identity_check(&fam, &ParameterGrid::new(n, 4, 1.0).unwrap(), 0.2, &AmbientPolynomial2::X).unwrap()
        };
        let (a, b) = (e(64), e(128));
        assert!(((a / b).log2() - 2.0).abs() < 0.3, "{a} {b}");
    }

    #[test]
    fn transport_formula_second_order_in_dt() {
        let fam = SurfaceFamily::Bean { amplitude: 0.5, period: 1.0 };
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        let f = |th: f64, t: f64| 1.0 + th.cos() * (TAU * t).sin();
        let ft = |th: f64, t: f64| TAU * th.cos() * (TAU * t).cos();
        let r1 = transport_formula_check(&fam, &grid, 0.3, 1e-2, f, ft).unwrap();
        let r2 = transport_formula_check(&fam, &grid, 0.3, 5e-3, f, ft).unwrap();
        assert!(((r1 / r2).log2() - 2.0).abs() < 0.3, "{r1} {r2}");
    }
}
