//! Periodically moving closed curves and their tangential calculus.
//!
//! Every surface is described by a global periodic chart `X(theta, t)` with
//! `theta` in `[0, 2 pi)`. Shipped charts are counter-clockwise, so the unit
//! normal obtained by rotating the unit tangent by -90 degrees points away
//! from the enclosed region. The reference surface `M` is the curve at `t = 0`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::grid::{check_len, periodic_derivative, ParameterGrid, ScalarField};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Immersion threshold on `|dX/dtheta|`.
pub const MIN_SPEED: f64 = 1e-12;

/// A periodically moving closed curve given by a chart and its exact derivatives.
pub trait Chart: Send + Sync {
    /// Period `T` of the motion.
    fn period(&self) -> f64;
    fn position(&self, theta: f64, t: f64) -> Vec2;
    fn d_theta(&self, theta: f64, t: f64) -> Vec2;
    fn d_theta2(&self, theta: f64, t: f64) -> Vec2;
    fn d_t(&self, theta: f64, t: f64) -> Vec2;
    fn d_theta_t(&self, theta: f64, t: f64) -> Vec2;

    /// Dimension `n` of the hypersurface; curves in the plane have `n = 1`.
    fn dimension(&self) -> usize {
        1
    }

    fn label(&self) -> String {
        "chart".to_string()
    }
}

/// Rotation of a tangent vector by -90 degrees (outward normal for ccw curves).
#[inline]
pub fn outward(tangent: &Vec2) -> Vec2 {
    Vec2::new(tangent.y, -tangent.x)
}

#[inline]
fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Signed curvature `(x' y'' - y' x'') / |X'|^3` from chart derivatives.
#[inline]
pub fn curvature(d1: &Vec2, d2: &Vec2) -> f64 {
    (d1.x * d2.y - d1.y * d2.x) / d1.norm().powi(3)
}

/// The analytic families shipped with the crate.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceFamily {
    /// Stationary circle `X = R (cos theta, sin theta)`.
    Circle { radius: f64, period: f64 },
    /// `X = r(t) (cos theta, sin theta)` with `r(t) = 1 + a sin(2 pi t / T)`.
    BreathingCircle { amplitude: f64, period: f64 },
    /// Ellipse with semi-axes `(a, b)` rigidly rotated by `2 pi turns t / T`.
    RotatingEllipse { semi_major: f64, semi_minor: f64, turns: u32, period: f64 },
    /// Star-shaped bean `rho = 1 + p(t) (0.3 cos 2theta + 0.1 cos 3theta)`,
    /// `p(t) = amplitude (1 + 0.5 sin(2 pi t / T))`.
    Bean { amplitude: f64, period: f64 },
}

/// Radial profile `rho(theta, t)` and the derivatives needed by a polar chart.
struct Polar {
    rho: f64,
    rho_th: f64,
    rho_thth: f64,
    rho_t: f64,
    rho_tht: f64,
}

impl SurfaceFamily {
    pub fn unit_circle() -> Self {
        Self::Circle { radius: 1.0, period: 1.0 }
    }

    pub fn breathing(amplitude: f64, period: f64) -> Self {
        Self::BreathingCircle { amplitude, period }
    }

    pub fn names() -> &'static [&'static str] {
        &["circle", "breathing", "rotating_ellipse", "bean"]
    }

    /// Largest admissible amplitude keeping the shipped charts immersed and embedded.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Precondition(msg));
        match *self {
            Self::Circle { radius, period } => {
                if radius <= 0.0 || period <= 0.0 {
                    return bad(format!("circle needs radius > 0 and T > 0 (got {radius}, {period})"));
                }
            }
            Self::BreathingCircle { amplitude, period } => {
                if !(amplitude.abs() < 1.0) || period <= 0.0 {
                    return bad(format!("breathing circle needs |a| < 1 and T > 0 (got {amplitude}, {period})"));
                }
            }
            Self::RotatingEllipse { semi_major, semi_minor, period, .. } => {
                if semi_major <= 0.0 || semi_minor <= 0.0 || period <= 0.0 {
                    return bad("rotating ellipse needs positive semi-axes and T > 0".to_string());
                }
            }
            Self::Bean { amplitude, period } => {
                if !(0.0..=1.0).contains(&amplitude) || period <= 0.0 {
                    return bad(format!("bean needs amplitude in [0, 1] and T > 0 (got {amplitude})"));
                }
            }
        }
        Ok(())
    }

    /// Radius `r(t)` of the breathing circle, `None` for other families.
    pub fn breathing_radius(&self, t: f64) -> Option<f64> {
        match *self {
            Self::BreathingCircle { amplitude, period } => Some(1.0 + amplitude * (TAU * t / period).sin()),
            Self::Circle { radius, .. } => Some(radius),
            _ => None,
        }
    }

    fn polar(&self, theta: f64, t: f64) -> Option<Polar> {
        match *self {
            Self::Circle { radius, .. } => {
                Some(Polar { rho: radius, rho_th: 0.0, rho_thth: 0.0, rho_t: 0.0, rho_tht: 0.0 })
            }
            Self::BreathingCircle { amplitude, period } => {
                let w = TAU / period;
                Some(Polar {
                    rho: 1.0 + amplitude * (w * t).sin(),
                    rho_th: 0.0,
                    rho_thth: 0.0,
                    rho_t: amplitude * w * (w * t).cos(),
                    rho_tht: 0.0,
                })
            }
            Self::Bean { amplitude, period } => {
                let w = TAU / period;
                let p = amplitude * (1.0 + 0.5 * (w * t).sin());
                let pt = amplitude * 0.5 * w * (w * t).cos();
                let shape = 0.3 * (2.0 * theta).cos() + 0.1 * (3.0 * theta).cos();
                let shape_th = -0.6 * (2.0 * theta).sin() - 0.3 * (3.0 * theta).sin();
                let shape_thth = -1.2 * (2.0 * theta).cos() - 0.9 * (3.0 * theta).cos();
                Some(Polar {
                    rho: 1.0 + p * shape,
                    rho_th: p * shape_th,
                    rho_thth: p * shape_thth,
                    rho_t: pt * shape,
                    rho_tht: pt * shape_th,
                })
            }
            Self::RotatingEllipse { .. } => None,
        }
    }

    fn ellipse(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Self::RotatingEllipse { semi_major, semi_minor, turns, period } => {
                Some((semi_major, semi_minor, TAU * turns as f64 / period))
            }
            _ => None,
        }
    }
}

impl fmt::Display for SurfaceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Circle { radius, .. } => write!(f, "circle(R={radius})"),
            Self::BreathingCircle { amplitude, .. } => write!(f, "breathing(a={amplitude})"),
            Self::RotatingEllipse { semi_major, semi_minor, turns, .. } => {
                write!(f, "rotating_ellipse(a={semi_major}, b={semi_minor}, turns={turns})")
            }
            Self::Bean { amplitude, .. } => write!(f, "bean(amp={amplitude})"),
        }
    }
}

impl Chart for SurfaceFamily {
    fn period(&self) -> f64 {
        match *self {
            Self::Circle { period, .. }
            | Self::BreathingCircle { period, .. }
            | Self::RotatingEllipse { period, .. }
            | Self::Bean { period, .. } => period,
        }
    }

    fn position(&self, theta: f64, t: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        if let Some(p) = self.polar(theta, t) {
            return p.rho * Vec2::new(c, s);
        }
        let (a, b, w) = self.ellipse().unwrap();
        rotation(w * t) * Vec2::new(a * c, b * s)
    }

    fn d_theta(&self, theta: f64, t: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        if let Some(p) = self.polar(theta, t) {
            return p.rho_th * Vec2::new(c, s) + p.rho * Vec2::new(-s, c);
        }
        let (a, b, w) = self.ellipse().unwrap();
        rotation(w * t) * Vec2::new(-a * s, b * c)
    }

    fn d_theta2(&self, theta: f64, t: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        if let Some(p) = self.polar(theta, t) {
            return (p.rho_thth - p.rho) * Vec2::new(c, s) + 2.0 * p.rho_th * Vec2::new(-s, c);
        }
        let (a, b, w) = self.ellipse().unwrap();
        rotation(w * t) * Vec2::new(-a * c, -b * s)
    }

    fn d_t(&self, theta: f64, t: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        if let Some(p) = self.polar(theta, t) {
            return p.rho_t * Vec2::new(c, s);
        }
        let (a, b, w) = self.ellipse().unwrap();
        let x = Vec2::new(a * c, b * s);
        w * (rotation(w * t + PI / 2.0) * x)
    }

    fn d_theta_t(&self, theta: f64, t: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        if let Some(p) = self.polar(theta, t) {
            return p.rho_tht * Vec2::new(c, s) + p.rho_t * Vec2::new(-s, c);
        }
        let (a, b, w) = self.ellipse().unwrap();
        let xth = Vec2::new(-a * s, b * c);
        w * (rotation(w * t + PI / 2.0) * xth)
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

type ChartFn = dyn Fn(f64, f64) -> Vec2 + Send + Sync;

/// User-supplied chart whose derivatives come from fourth-order central differences.
#[derive(Clone)]
pub struct FiniteDifferenceChart {
    map: Arc<ChartFn>,
    period: f64,
    h_theta: f64,
    h_t: f64,
}

impl FiniteDifferenceChart {
    pub fn new(period: f64, map: impl Fn(f64, f64) -> Vec2 + Send + Sync + 'static) -> Self {
        Self { map: Arc::new(map), period, h_theta: 1e-3, h_t: 1e-3 * period }
    }

    fn d1(f: impl Fn(f64) -> Vec2, x: f64, h: f64) -> Vec2 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn d2(f: impl Fn(f64) -> Vec2, x: f64, h: f64) -> Vec2 {
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
    }
}

impl fmt::Debug for FiniteDifferenceChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceChart").field("period", &self.period).finish()
    }
}

impl Chart for FiniteDifferenceChart {
    fn period(&self) -> f64 {
        self.period
    }

    fn position(&self, theta: f64, t: f64) -> Vec2 {
        (self.map)(theta, t)
    }

    fn d_theta(&self, theta: f64, t: f64) -> Vec2 {
        Self::d1(|th| (self.map)(th, t), theta, self.h_theta)
    }

    fn d_theta2(&self, theta: f64, t: f64) -> Vec2 {
        Self::d2(|th| (self.map)(th, t), theta, self.h_theta)
    }

    fn d_t(&self, theta: f64, t: f64) -> Vec2 {
        Self::d1(|s| (self.map)(theta, s), t, self.h_t)
    }

    fn d_theta_t(&self, theta: f64, t: f64) -> Vec2 {
        Self::d1(|s| self.d_theta(theta, s), t, self.h_t)
    }

    fn label(&self) -> String {
        "finite-difference chart".to_string()
    }
}

/// Normal, projection, Weingarten map and velocity of `Gamma(t)` at every node.
#[derive(Clone, Debug)]
pub struct GeometryFrame {
    pub time: f64,
    pub dtheta: f64,
    pub position: Vec<Vec2>,
    pub x_theta: Vec<Vec2>,
    pub x_theta2: Vec<Vec2>,
    pub x_theta_t: Vec<Vec2>,
    pub speed: Vec<f64>,
    pub tangent: Vec<Vec2>,
    pub nu: Vec<Vec2>,
    pub proj: Vec<Mat2>,
    pub weingarten: Vec<Mat2>,
    pub curvature: Vec<f64>,
    pub velocity: Vec<Vec2>,
}

impl GeometryFrame {
    pub fn nodes(&self) -> usize {
        self.speed.len()
    }
}

pub(crate) fn check_time(t: f64, period: f64) -> Result<()> {
    let slack = 1e-12 * period;
    if t < -slack || t > period + slack || !t.is_finite() {
        Err(Error::TimeOutOfRange { t, period })
    } else {
        Ok(())
    }
}

pub fn build_frame(surface: &dyn Chart, grid: &ParameterGrid, t: f64) -> Result<GeometryFrame> {
    check_time(t, surface.period())?;
    let n = grid.nodes();
    let mut frame = GeometryFrame {
        time: t,
        dtheta: grid.dtheta(),
        position: Vec::with_capacity(n),
        x_theta: Vec::with_capacity(n),
        x_theta2: Vec::with_capacity(n),
        x_theta_t: Vec::with_capacity(n),
        speed: Vec::with_capacity(n),
        tangent: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
        proj: Vec::with_capacity(n),
        weingarten: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        velocity: Vec::with_capacity(n),
    };
    for i in 0..n {
        let theta = grid.theta(i);
        let d1 = surface.d_theta(theta, t);
        let speed = d1.norm();
        if !(speed > MIN_SPEED) {
            return Err(Error::DegenerateSurface { theta, t, speed });
        }
        let d2 = surface.d_theta2(theta, t);
        let tau = d1 / speed;
        let nu = outward(&tau);
        let kappa = curvature(&d1, &d2);
        frame.position.push(surface.position(theta, t));
        frame.x_theta.push(d1);
        frame.x_theta2.push(d2);
        frame.x_theta_t.push(surface.d_theta_t(theta, t));
        frame.speed.push(speed);
        frame.tangent.push(tau);
        frame.nu.push(nu);
        frame.proj.push(Mat2::identity() - nu * nu.transpose());
        frame.weingarten.push(kappa * tau * tau.transpose());
        frame.curvature.push(kappa);
        frame.velocity.push(surface.d_t(theta, t));
    }
    Ok(frame)
}

/// `grad_M f` from second-order central differences of the nodal values.
pub fn tangential_gradient(frame: &GeometryFrame, field: &ScalarField) -> Result<Vec<Vec2>> {
    check_len(frame.nodes(), field.len())?;
    let du = periodic_derivative(&field.values, frame.dtheta);
    Ok(tangential_gradient_exact(frame, &du))
}

/// `grad_M f` from exact parameter derivatives `dU/dtheta`.
pub fn tangential_gradient_exact(frame: &GeometryFrame, du_dtheta: &[f64]) -> Vec<Vec2> {
    du_dtheta.iter().zip(frame.speed.iter().zip(&frame.tangent)).map(|(du, (s, tau))| (du / s) * tau).collect()
}

/// Exact parameter derivatives of a scalar field, for the exact-derivative paths.
#[derive(Clone, Debug)]
pub struct FieldDerivatives {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl FieldDerivatives {
    pub fn sample(grid: &ParameterGrid, d1: impl Fn(f64) -> f64, d2: impl Fn(f64) -> f64) -> Self {
        Self { d1: grid.thetas().into_iter().map(&d1).collect(), d2: grid.thetas().into_iter().map(&d2).collect() }
    }
}

/// Max over nodes and index pairs of
/// `|D_a D_b f - D_b D_a f - (H_bh nu_a - H_ah nu_b) D_h f|`.
pub fn commutator_check(frame: &GeometryFrame, field: &ScalarField, exact: Option<&FieldDerivatives>) -> Result<f64> {
    let n = frame.nodes();
    check_len(n, field.len())?;
    let (grad, hess): (Vec<Vec2>, Vec<Mat2>) = match exact {
        Some(der) => {
            check_len(n, der.d1.len())?;
            check_len(n, der.d2.len())?;
            let grad = tangential_gradient_exact(frame, &der.d1);
            let hess = (0..n)
                .map(|i| {
                    let s2 = frame.speed[i] * frame.speed[i];
                    let xt = frame.x_theta[i];
                    let xtt = frame.x_theta2[i];
                    // d/dtheta of U' X_theta / |X_theta|^2
                    let dw =
                        der.d2[i] * xt / s2 + der.d1[i] * xtt / s2 - 2.0 * der.d1[i] * xt * xt.dot(&xtt) / (s2 * s2);
                    (frame.tangent[i] / frame.speed[i]) * dw.transpose()
                })
                .collect();
            (grad, hess)
        }
        None => {
            let grad = tangential_gradient(frame, field)?;
            let gx: Vec<f64> = grad.iter().map(|g| g.x).collect();
            let gy: Vec<f64> = grad.iter().map(|g| g.y).collect();
            let dgx = periodic_derivative(&gx, frame.dtheta);
            let dgy = periodic_derivative(&gy, frame.dtheta);
            let hess =
                (0..n).map(|i| (frame.tangent[i] / frame.speed[i]) * Vec2::new(dgx[i], dgy[i]).transpose()).collect();
            (grad, hess)
        }
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let h = &frame.weingarten[i];
        let nu = &frame.nu[i];
        let hg = h * grad[i];
        for a in 0..2 {
            for b in 0..2 {
                let lhs = hess[i][(a, b)] - hess[i][(b, a)];
                let rhs = hg[b] * nu[a] - hg[a] * nu[b];
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    struct Line;
    impl Chart for Line {
        fn period(&self) -> f64 {
            1.0
        }
        fn position(&self, theta: f64, _t: f64) -> Vec2 {
            Vec2::new(2.0 * theta, 0.5 * theta)
        }
        fn d_theta(&self, _: f64, _: f64) -> Vec2 {
            Vec2::new(2.0, 0.5)
        }
        fn d_theta2(&self, _: f64, _: f64) -> Vec2 {
            Vec2::zeros()
        }
        fn d_t(&self, _: f64, _: f64) -> Vec2 {
            Vec2::zeros()
        }
        fn d_theta_t(&self, _: f64, _: f64) -> Vec2 {
            Vec2::zeros()
        }
    }

    fn families() -> Vec<SurfaceFamily> {
        vec![
            SurfaceFamily::unit_circle(),
            SurfaceFamily::breathing(0.3, 1.0),
            SurfaceFamily::RotatingEllipse { semi_major: 2.0, semi_minor: 1.0, turns: 1, period: 2.0 },
            SurfaceFamily::Bean { amplitude: 0.8, period: 1.5 },
        ]
    }

    #[test]
    fn unit_circle_frame() {
        let grid = ParameterGrid::new(16, 4, 1.0).unwrap();
        let f = build_frame(&SurfaceFamily::unit_circle(), &grid, 0.37).unwrap();
        for i in 0..16 {
            let th = grid.theta(i);
            assert_abs_diff_eq!(f.nu[i], Vec2::new(th.cos(), th.sin()), epsilon = 1e-15);
            let tau = f.tangent[i];
            assert_abs_diff_eq!(tau.dot(&(f.weingarten[i] * tau)), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.velocity[i].norm(), 0.0);
        }
    }

    #[test]
    fn breathing_velocity_is_radial() {
        let grid = ParameterGrid::new(16, 4, 2.0).unwrap();
        let a = 0.3;
        let t = 0.4;
        let f = build_frame(&SurfaceFamily::breathing(a, 2.0), &grid, t).unwrap();
        let rp = a * TAU / 2.0 * (TAU * t / 2.0).cos();
        for i in 0..16 {
            let th = grid.theta(i);
            assert_abs_diff_eq!(f.velocity[i], rp * Vec2::new(th.cos(), th.sin()), epsilon = 1e-14);
        }
    }

    #[test]
    fn ellipse_curvature_matches_symbolic_oracle() {
        // x = 2 cos, y = sin: at theta = 0, x' = 0, y' = 1, x'' = -2, y'' = 0,
        // so kappa = (0*0 - 1*(-2)) / 1^3 = 2 = a / b^2.
        let e = SurfaceFamily::RotatingEllipse { semi_major: 2.0, semi_minor: 1.0, turns: 1, period: 1.0 };
        let grid = ParameterGrid::new(8, 4, 1.0).unwrap();
        let f = build_frame(&e, &grid, 0.0).unwrap();
        assert_abs_diff_eq!(f.curvature[0], 2.0, epsilon = 1e-12);
        // theta = pi/2: x' = -2, y' = 0, x'' = 0, y'' = -1 -> kappa = 2 / 8 = b / a^2.
        assert_abs_diff_eq!(f.curvature[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn frame_invariants_on_all_families() {
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        for fam in families() {
            for &t in &[0.0, 0.21, fam.period()] {
                let f = build_frame(&fam, &grid, t).unwrap();
                for i in 0..64 {
                    assert!((1.0 - f.nu[i].norm()).abs() <= 1e-12);
                    let p = f.proj[i];
                    assert!((p * p - p).abs().max() <= 1e-12);
                    assert!((p * f.nu[i]).norm() <= 1e-12);
                    let h = f.weingarten[i];
                    assert!((h - h.transpose()).abs().max() <= 1e-12);
                    assert!((h * f.nu[i]).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn shipped_charts_are_time_periodic_exactly() {
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        for fam in families() {
            for th in grid.thetas() {
                let d = (fam.position(th, 0.0) - fam.position(th, fam.period())).norm();
                assert!(d <= 1e-15, "{fam}: {d}");
                let c = (fam.position(th + TAU, 0.3) - fam.position(th, 0.3)).norm();
                assert!(c <= 1e-13);
            }
        }
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        for fam in families() {
            let fd = {
                let f = fam.clone();
                FiniteDifferenceChart::new(fam.period(), move |th, t| f.position(th, t))
            };
            for &(th, t) in &[(0.3, 0.1), (2.0, 0.7), (5.1, 0.45)] {
                assert!((fam.d_theta(th, t) - fd.d_theta(th, t)).norm() < 1e-9);
                assert!((fam.d_theta2(th, t) - fd.d_theta2(th, t)).norm() < 1e-7);
                assert!((fam.d_t(th, t) - fd.d_t(th, t)).norm() < 1e-8);
                assert!((fam.d_theta_t(th, t) - fd.d_theta_t(th, t)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn degenerate_chart_rejected() {
        let c = FiniteDifferenceChart::new(1.0, |_, _| Vec2::new(1.0, 1.0));
        let grid = ParameterGrid::new(8, 4, 1.0).unwrap();
        assert!(matches!(build_frame(&c, &grid, 0.0), Err(Error::DegenerateSurface { .. })));
        assert!(matches!(build_frame(&SurfaceFamily::unit_circle(), &grid, 1.5), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let grid = ParameterGrid::new(32, 4, 1.0).unwrap();
        let f = build_frame(&SurfaceFamily::Bean { amplitude: 0.5, period: 1.0 }, &grid, 0.2).unwrap();
        let g = tangential_gradient(&f, &ScalarField::constant(32, 3.0, 0.2)).unwrap();
        assert!(g.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn gradient_of_x1_on_unit_circle() {
        let grid = ParameterGrid::new(256, 4, 1.0).unwrap();
        let frame = build_frame(&SurfaceFamily::unit_circle(), &grid, 0.0).unwrap();
        let u = grid.sample(0.0, f64::cos);
        let g = tangential_gradient(&frame, &u).unwrap();
        // theta = pi/2 is node 64: -sin(pi/2) * (-1, 0) = (1, 0)
        assert_abs_diff_eq!(g[64], Vec2::new(1.0, 0.0), epsilon = 1e-3);
        assert_abs_diff_eq!(g[0].norm(), 0.0, epsilon = 1e-15);
        let exact = tangential_gradient_exact(&frame, &grid.thetas().iter().map(|t| -t.sin()).collect::<Vec<_>>());
        assert_abs_diff_eq!(exact[64], Vec2::new(1.0, 0.0), epsilon = 1e-15);
        // tangential by construction
        for (nu, gi) in frame.nu.iter().zip(&g) {
            assert!(nu.dot(gi).abs() <= 1e-10);
        }
    }

    #[test]
    fn commutator_vanishes_on_flat_chart() {
        let grid = ParameterGrid::new(32, 4, 1.0).unwrap();
        let frame = build_frame(&Line, &grid, 0.0).unwrap();
        let u = grid.sample(0.0, |t| (3.0 * t).sin() + t * t);
        let der =
            FieldDerivatives::sample(&grid, |t| 3.0 * (3.0 * t).cos() + 2.0 * t, |t| -9.0 * (3.0 * t).sin() + 2.0);
        assert!(commutator_check(&frame, &u, Some(&der)).unwrap() <= 1e-13);
    }

    #[test]
    fn commutator_of_constant_is_zero() {
        let grid = ParameterGrid::new(32, 4, 1.0).unwrap();
        let frame = build_frame(&SurfaceFamily::unit_circle(), &grid, 0.0).unwrap();
        assert_eq!(commutator_check(&frame, &ScalarField::constant(32, 2.0, 0.0), None).unwrap(), 0.0);
    }

    #[test]
    fn discrete_commutator_converges_at_second_order() {
        let fam = SurfaceFamily::unit_circle();
        let residual = |n: usize| {
            let grid = ParameterGrid::new(n, 4, 1.0).unwrap();
            let frame = build_frame(&fam, &grid, 0.0).unwrap();
            commutator_check(&frame, &grid.sample(0.0, f64::cos), None).unwrap()
        };
        let (r1, r2, r3) = (residual(64), residual(128), residual(256));
        assert!((r1 / r2 - 4.0).abs() < 0.2, "{r1} {r2}");
        assert!((r2 / r3 - 4.0).abs() < 0.2, "{r2} {r3}");
    }

    #[test]
    fn exact_commutator_vanishes_on_curved_families() {
        for fam in families() {
            let grid = ParameterGrid::new(256, 4, fam.period()).unwrap();
            let t = 0.3 * fam.period();
            let frame = build_frame(&fam, &grid, t).unwrap();
            let u = grid.sample(t, |th| fam.position(th, t).x);
            let der = FieldDerivatives::sample(&grid, |th| fam.d_theta(th, t).x, |th| fam.d_theta2(th, t).x);
            assert!(commutator_check(&frame, &u, Some(&der)).unwrap() <= 1e-9);
        }
    }
}
