//! Narrow-band extension of surface problems to a Cartesian strip.
//!
//! The band `N_delta = {|d| < delta}` around `Gamma(t)` is sampled on a uniform
//! grid of spacing `h`. Nodes with `delta <= |d| < delta + 4h` are kept as a
//! ghost layer for stencils and Neumann mirroring. Closest points come from a
//! damped Newton projection onto the analytic chart, so `d`, `a(x)`, `nu` and
//! `H = Hess d = kappa / (1 + d kappa) tau tau^T` are exact up to round-off.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::{check_len, ParameterGrid, ScalarField};
use crate::surface::{curvature, outward, Chart, Mat2, Vec2};

/// Width of the ghost layer in grid spacings.
pub const GHOST_LAYERS: f64 = 4.0;

const GHOST_SWEEPS: usize = 500;
const NEWTON_STARTS: isize = 8;
const NEWTON_MAX_ITER: usize = 60;

/// Uniform Cartesian nodes around the curve; stored nodes are indexed densely.
#[derive(Clone, Debug)]
pub struct NarrowBandGrid {
    pub h: f64,
    pub delta: f64,
    pub time: f64,
    pub origin: Vec2,
    pub nx: usize,
    pub ny: usize,
    /// `(ix, iy)` of every stored node.
    pub cells: Vec<(usize, usize)>,
    /// `|d| < delta`.
    pub active: Vec<bool>,
    lookup: Vec<u32>,
}

impl NarrowBandGrid {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, node: usize) -> Vec2 {
        let (ix, iy) = self.cells[node];
        self.origin + Vec2::new(ix as f64 * self.h, iy as f64 * self.h)
    }

    pub fn at(&self, ix: isize, iy: isize) -> Option<usize> {
        if ix < 0 || iy < 0 || ix as usize >= self.nx || iy as usize >= self.ny {
            return None;
        }
        let k = self.lookup[iy as usize * self.nx + ix as usize];
        (k != u32::MAX).then_some(k as usize)
    }

    pub fn neighbor(&self, node: usize, dx: isize, dy: isize) -> Option<usize> {
        let (ix, iy) = self.cells[node];
        self.at(ix as isize + dx, iy as isize + dy)
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&k| self.active[k])
    }
}

/// Distance data per stored node.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub d: Vec<f64>,
    /// Chart parameter of the closest point.
    pub theta: Vec<f64>,
    pub a: Vec<Vec2>,
    pub nu: Vec<Vec2>,
    pub kappa: Vec<f64>,
    pub h_ext: Vec<Mat2>,
    pub a_mat: Vec<Mat2>,
    pub a_inv: Vec<Mat2>,
    pub mu: Vec<f64>,
}

#[derive(Clone)]
pub struct Band {
    pub grid: NarrowBandGrid,
    pub field: DistanceField,
    pub chart: Arc<dyn Chart>,
}

struct Projection {
    theta: f64,
    dist2: f64,
}

fn project(chart: &dyn Chart, t: f64, x: &Vec2, theta0: f64) -> Option<Projection> {
    let phi = |th: f64| 0.5 * (chart.position(th, t) - x).norm_squared();
    let mut th = theta0;
    for _ in 0..NEWTON_MAX_ITER {
        let r = chart.position(th, t) - x;
        let d1 = chart.d_theta(th, t);
        let grad = r.dot(&d1);
        let speed2 = d1.norm_squared();
        let curv = speed2 + r.dot(&chart.d_theta2(th, t));
        let mut step = if curv > 0.0 { -grad / curv } else { -grad / speed2 };
        if step.abs() <= 1e-14 {
            return Some(Projection { theta: th + step, dist2: 2.0 * phi(th + step) });
        }
        if step.abs() > 0.1 {
            let value = phi(th);
            while step.abs() > 1e-8 && phi(th + step) >= value {
                step *= 0.5;
            }
        }
        th += step;
    }
    let r = chart.position(th, t) - x;
    let d1 = chart.d_theta(th, t);
    (r.dot(&d1).abs() <= 1e-12 * d1.norm() * (1.0 + r.norm()))
        .then(|| Projection { theta: th, dist2: r.norm_squared() })
}

fn wrap(theta: f64) -> f64 {
    theta.rem_euclid(std::f64::consts::TAU)
}

/// Builds the band of half-width `delta` around `Gamma(t)` on a grid of spacing `h`.
pub fn build_band(chart: Arc<dyn Chart>, t: f64, h: f64, delta: f64) -> Result<Band> {
    if !(h > 0.0) || !(delta > 0.0) {
        return Err(Error::Precondition(format!("band needs h > 0 and delta > 0 (got {h}, {delta})")));
    }
    if delta < 2.0 * h {
        return Err(Error::BandTooThin(format!("delta = {delta} is below 2h = {}", 2.0 * h)));
    }
    let c = chart.as_ref();
    let ns = 1024usize.max((16.0 / h).ceil() as usize);
    let dth = std::f64::consts::TAU / ns as f64;
    let samples: Vec<Vec2> = (0..ns).map(|j| c.position(j as f64 * dth, t)).collect();
    let max_kappa = (0..ns)
        .map(|j| curvature(&c.d_theta(j as f64 * dth, t), &c.d_theta2(j as f64 * dth, t)).abs())
        .fold(0.0, f64::max);
    if delta * max_kappa >= 0.5 {
        return Err(Error::BandTooWide { product: delta * max_kappa });
    }
    let spacing = samples.iter().enumerate().map(|(j, p)| (samples[(j + 1) % ns] - p).norm()).fold(0.0, f64::max);
    let reach = delta + GHOST_LAYERS * h;
    let radius = reach + spacing;

    let (mut lo, mut hi) = (samples[0], samples[0]);
    for p in &samples {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let margin = radius + 2.0 * h;
    let origin = Vec2::new(((lo.x - margin) / h).floor() * h, ((lo.y - margin) / h).floor() * h);
    let nx = ((hi.x + margin - origin.x) / h).ceil() as usize + 1;
    let ny = ((hi.y + margin - origin.y) / h).ceil() as usize + 1;

    let mut best = vec![(f64::INFINITY, usize::MAX); nx * ny];
    let span = (radius / h).ceil() as isize;
    for (j, p) in samples.iter().enumerate() {
        let cx = ((p.x - origin.x) / h).round() as isize;
        let cy = ((p.y - origin.y) / h).round() as isize;
        for iy in (cy - span).max(0)..=(cy + span).min(ny as isize - 1) {
            for ix in (cx - span).max(0)..=(cx + span).min(nx as isize - 1) {
                let x = origin + Vec2::new(ix as f64 * h, iy as f64 * h);
                let d2 = (x - p).norm_squared();
                let slot = &mut best[iy as usize * nx + ix as usize];
                if d2 < slot.0 {
                    *slot = (d2, j);
                }
            }
        }
    }

    let mut grid = NarrowBandGrid {
        h,
        delta,
        time: t,
        origin,
        nx,
        ny,
        cells: Vec::new(),
        active: Vec::new(),
        lookup: vec![u32::MAX; nx * ny],
    };
    let mut field = DistanceField {
        d: Vec::new(),
        theta: Vec::new(),
        a: Vec::new(),
        nu: Vec::new(),
        kappa: Vec::new(),
        h_ext: Vec::new(),
        a_mat: Vec::new(),
        a_inv: Vec::new(),
        mu: Vec::new(),
    };
    for iy in 0..ny {
        for ix in 0..nx {
            let (d2, j) = best[iy * nx + ix];
            if d2 > radius * radius {
                continue;
            }
            let x = origin + Vec2::new(ix as f64 * h, iy as f64 * h);
            let mut found: Option<Projection> = None;
            for off in -NEWTON_STARTS / 2..NEWTON_STARTS / 2 {
                let th0 = (j as isize + off).rem_euclid(ns as isize) as f64 * dth;
                if let Some(p) = project(c, t, &x, th0) {
                    if found.as_ref().is_none_or(|f| p.dist2 < f.dist2) {
                        found = Some(p);
                    }
                }
            }
            let p = found.ok_or(Error::Projection { x: x.x, y: x.y })?;
            let theta = wrap(p.theta);
            let a = c.position(theta, t);
            let d1 = c.d_theta(theta, t);
            let tau = d1 / d1.norm();
            let nu = outward(&tau);
            let d = (x - a).dot(&nu);
            if d.abs() >= reach {
                continue;
            }
            let kappa = curvature(&d1, &c.d_theta2(theta, t));
            let tt = tau * tau.transpose();
            let nn = nu * nu.transpose();
            let scale = 1.0 + d * kappa;
            grid.lookup[iy * nx + ix] = grid.cells.len() as u32;
            grid.cells.push((ix, iy));
            grid.active.push(d.abs() < delta);
            field.d.push(d);
            field.theta.push(theta);
            field.a.push(a);
            field.nu.push(nu);
            field.kappa.push(kappa);
            field.h_ext.push((kappa / scale) * tt);
            field.a_mat.push(tt / scale + nn);
            field.a_inv.push(scale * tt + nn);
            field.mu.push(1.0 / scale);
        }
    }
    Ok(Band { grid, field, chart })
}

impl Band {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn value(&self, values: &[f64], node: usize, dx: isize, dy: isize) -> Option<f64> {
        self.grid.neighbor(node, dx, dy).map(|k| values[k])
    }

    /// Central-difference gradient at a node.
    pub fn gradient(&self, values: &[f64], node: usize) -> Option<Vec2> {
        let h2 = 2.0 * self.grid.h;
        Some(Vec2::new(
            (self.value(values, node, 1, 0)? - self.value(values, node, -1, 0)?) / h2,
            (self.value(values, node, 0, 1)? - self.value(values, node, 0, -1)?) / h2,
        ))
    }

    /// Central-difference Hessian at a node, including the mixed term.
    pub fn hessian(&self, values: &[f64], node: usize) -> Option<Mat2> {
        let h = self.grid.h;
        let u = values[node];
        let xx = (self.value(values, node, 1, 0)? - 2.0 * u + self.value(values, node, -1, 0)?) / (h * h);
        let yy = (self.value(values, node, 0, 1)? - 2.0 * u + self.value(values, node, 0, -1)?) / (h * h);
        let xy =
            (self.value(values, node, 1, 1)? - self.value(values, node, 1, -1)? - self.value(values, node, -1, 1)?
                + self.value(values, node, -1, -1)?)
                / (4.0 * h * h);
        Some(Mat2::new(xx, xy, xy, yy))
    }

    /// Central difference of a matrix field in the `x` and `y` directions.
    fn matrix_gradient(&self, m: &[Mat2], node: usize) -> Option<[Mat2; 2]> {
        let h2 = 2.0 * self.grid.h;
        let g = &self.grid;
        Some([
            (m[g.neighbor(node, 1, 0)?] - m[g.neighbor(node, -1, 0)?]) / h2,
            (m[g.neighbor(node, 0, 1)?] - m[g.neighbor(node, 0, -1)?]) / h2,
        ])
    }

    fn tangential_rescale(&self, node: usize) -> Mat2 {
        let nu = self.field.nu[node];
        self.field.a_inv[node] * (Mat2::identity() - nu * nu.transpose())
    }

    fn thin(&self, node: usize) -> Error {
        let x = self.grid.position(node);
        Error::BandTooThin(format!("stencil at ({:.6}, {:.6}) leaves the stored band", x.x, x.y))
    }

    /// Closest-point lift of a closed-form surface function of the chart parameter.
    pub fn lift_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.field.theta.iter().map(|&th| f(th)).collect()
    }

    /// Lift of nodal data on the parameter grid by periodic cubic interpolation in `theta`.
    pub fn lift_field(&self, u: &ScalarField) -> Vec<f64> {
        self.field.theta.iter().map(|&th| periodic_cubic(&u.values, th)).collect()
    }

    /// Lift of a matrix-valued surface field given as a function of `theta`.
    pub fn lift_matrix(&self, f: impl Fn(f64) -> Mat2) -> Vec<Mat2> {
        self.field.theta.iter().map(|&th| f(th)).collect()
    }

    /// Lifted Cartesian metric `G(a(x), t)` of the moving chart, relative to the
    /// band's own curve as reference.
    pub fn lift_metric(&self, t: f64) -> (Vec<Mat2>, Vec<Mat2>) {
        let c = self.chart.as_ref();
        let tb = self.grid.time;
        let mut g = Vec::with_capacity(self.len());
        let mut gi = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            let th = self.field.theta[k];
            let stretch = c.d_theta(th, t).norm_squared() / c.d_theta(th, tb).norm_squared();
            let nu = self.field.nu[k];
            let tau = Vec2::new(-nu.y, nu.x);
            let tt = tau * tau.transpose();
            let nn = nu * nu.transpose();
            g.push(stretch * tt + nn);
            gi.push(tt / stretch + nn);
        }
        (g, gi)
    }

    /// `A^-1 P grad u` at every node where the central stencil is available.
    pub fn rescaled_gradient(&self, values: &[f64]) -> Vec<Option<Vec2>> {
        (0..self.len()).map(|k| self.gradient(values, k).map(|g| self.tangential_rescale(k) * g)).collect()
    }

    /// Applies the extended operator at every active node; other nodes get NaN.
    pub fn extended_operator_apply(&self, values: &[f64], coeffs: &ExtendedCoefficients) -> Result<Vec<f64>> {
        check_len(self.len(), values.len())?;
        let n = self.len();
        let identity = vec![Mat2::identity(); n];
        let g = coeffs.g.as_deref().unwrap_or(&identity);
        let g_inv = coeffs.g_inv.as_deref().unwrap_or(&identity);
        check_len(n, g.len())?;
        check_len(n, g_inv.len())?;
        let grad = self.rescaled_gradient(values);
        let flux: Vec<Option<Vec2>> = grad.iter().zip(g_inv).map(|(d, gi)| d.map(|d| gi * d)).collect();
        let h2 = 2.0 * self.grid.h;
        let mut out = vec![f64::NAN; n];
        for k in self.grid.active_nodes() {
            let at = |dx, dy| self.grid.neighbor(k, dx, dy).and_then(|j| flux[j]);
            let (Some(xp), Some(xm), Some(yp), Some(ym)) = (at(1, 0), at(-1, 0), at(0, 1), at(0, -1)) else {
                return Err(self.thin(k));
            };
            // jac[(a, b)] = d V_a / d x_b
            let jac = Mat2::new((xp.x - xm.x) / h2, (yp.x - ym.x) / h2, (xp.y - xm.y) / h2, (yp.y - ym.y) / h2);
            let r = self.tangential_rescale(k);
            let divergence = (r.component_mul(&jac)).sum();

            let v = flux[k].ok_or_else(|| self.thin(k))?;
            let [gx, gy] = self.matrix_gradient(g, k).ok_or_else(|| self.thin(k))?;
            // directional derivative of G along V with rescaled tangential derivatives
            let rv = r.transpose() * v;
            let dg = gx * rv.x + gy * rv.y;
            let nu = self.field.nu[k];
            let p = Mat2::identity() - nu * nu.transpose();
            let metric_term = 0.5 * (p * g_inv[k]).component_mul(&dg).sum();

            let hess = self.hessian(values, k).ok_or_else(|| self.thin(k))?;
            let normal = nu.dot(&(hess * nu));

            let mut total = divergence + metric_term + normal;
            if let Some(w) = &coeffs.w {
                total += w[k].dot(&grad[k].ok_or_else(|| self.thin(k))?);
            }
            if let Some(c) = &coeffs.c {
                total -= c[k] * values[k];
            }
            if let Some(ut) = &coeffs.u_t {
                total -= ut[k];
            }
            out[k] = total;
        }
        Ok(out)
    }

    /// `(1/mu) div(mu A^-2 grad u)` at active nodes by nodal central differences.
    pub fn os_operator(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), values.len())?;
        let flux: Vec<Option<Vec2>> = (0..self.len())
            .map(|k| {
                let ai = self.field.a_inv[k];
                self.gradient(values, k).map(|g| self.field.mu[k] * (ai * ai) * g)
            })
            .collect();
        let h2 = 2.0 * self.grid.h;
        let mut out = vec![f64::NAN; self.len()];
        for k in self.grid.active_nodes() {
            let at = |dx, dy| self.grid.neighbor(k, dx, dy).and_then(|j| flux[j]);
            let (Some(xp), Some(xm), Some(yp), Some(ym)) = (at(1, 0), at(-1, 0), at(0, 1), at(0, -1)) else {
                return Err(self.thin(k));
            };
            out[k] = ((xp.x - xm.x) / h2 + (yp.y - ym.y) / h2) / self.field.mu[k];
        }
        Ok(out)
    }

    /// `A^ra A^ai D_r D_i u + A^ar (D_r A^ai) D_i u - (div~ nu) du/dnu` at active nodes.
    pub fn elliptic_part(&self, values: &[f64]) -> Result<Vec<f64>> {
        check_len(self.len(), values.len())?;
        let h2 = 2.0 * self.grid.h;
        let mut out = vec![f64::NAN; self.len()];
        for k in self.grid.active_nodes() {
            let hess = self.hessian(values, k).ok_or_else(|| self.thin(k))?;
            let grad = self.gradient(values, k).ok_or_else(|| self.thin(k))?;
            let [ax, ay] = self.matrix_gradient(&self.field.a_inv, k).ok_or_else(|| self.thin(k))?;
            let ai = self.field.a_inv[k];
            let second = (ai * ai).component_mul(&hess).sum();
            // sum_{a,r,i} A^ar (D_r A^ai) D_i u
            let mut first = 0.0;
            for a in 0..2 {
                for i in 0..2 {
                    first += (ai[(a, 0)] * ax[(a, i)] + ai[(a, 1)] * ay[(a, i)]) * grad[i];
                }
            }
            let g = &self.grid;
            let nu = &self.field.nu;
            let (Some(xp), Some(xm), Some(yp), Some(ym)) =
                (g.neighbor(k, 1, 0), g.neighbor(k, -1, 0), g.neighbor(k, 0, 1), g.neighbor(k, 0, -1))
            else {
                return Err(self.thin(k));
            };
            let dnu = Mat2::from_columns(&[(nu[xp] - nu[xm]) / h2, (nu[yp] - nu[ym]) / h2]);
            let div_nu = (self.tangential_rescale(k) * dnu.transpose()).trace();
            out[k] = second + first - div_nu * nu[k].dot(&grad);
        }
        Ok(out)
    }

    /// Bicubic Lagrange interpolation of band values at `p`.
    pub fn interpolate(&self, values: &[f64], p: &Vec2) -> Option<f64> {
        let h = self.grid.h;
        let fx = (p.x - self.grid.origin.x) / h;
        let fy = (p.y - self.grid.origin.y) / h;
        let (bx, by) = (fx.floor(), fy.floor());
        let wx = cubic_weights(fx - bx);
        let wy = cubic_weights(fy - by);
        let mut total = 0.0;
        for (j, wyj) in wy.iter().enumerate() {
            for (i, wxi) in wx.iter().enumerate() {
                let k = self.grid.at(bx as isize - 1 + i as isize, by as isize - 1 + j as isize)?;
                total += wxi * wyj * values[k];
            }
        }
        Some(total)
    }

    /// Neumann ghost values: every stored node outside the band takes the
    /// bilinear interpolant at its mirror image `a + (+-2 delta - d) nu`,
    /// iterated until the ghost values settle.
    pub fn fill_ghosts(&self, values: &mut [f64]) {
        let delta = self.grid.delta;
        let mut ghosts: Vec<usize> = (0..self.len()).filter(|&k| !self.grid.active[k]).collect();
        ghosts.sort_by(|&a, &b| self.field.d[a].abs().total_cmp(&self.field.d[b].abs()));
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for _ in 0..GHOST_SWEEPS {
            let mut change = 0.0f64;
            for &k in &ghosts {
                let d = self.field.d[k];
                let mirror = self.field.a[k] + (delta.copysign(d) * 2.0 - d) * self.field.nu[k];
                if let Some(v) = self.interpolate_bilinear(values, &mirror, &(self.field.nu[k] * d.signum())) {
                    change = change.max((values[k] - v).abs());
                    values[k] = v;
                }
            }
            if change <= 1e-15 * scale {
                break;
            }
        }
    }

    /// Bilinear interpolant at `p`, taken from the first of the containing cell and
    /// its neighbours on the band side of `away` whose corners are all active.
    fn interpolate_bilinear(&self, values: &[f64], p: &Vec2, away: &Vec2) -> Option<f64> {
        let h = self.grid.h;
        let fx = (p.x - self.grid.origin.x) / h;
        let fy = (p.y - self.grid.origin.y) / h;
        let (cx, cy) = (fx.floor() as isize, fy.floor() as isize);
        let sx = if away.x > 0.0 { -1 } else { 1 };
        let sy = if away.y > 0.0 { -1 } else { 1 };
        let mut fallback = None;
        for (ox, oy) in [(0, 0), (sx, 0), (0, sy), (sx, sy)] {
            let (bx, by) = (cx + ox, cy + oy);
            let (tx, ty) = (fx - bx as f64, fy - by as f64);
            let corners = [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(dx, dy)| self.grid.at(bx + dx, by + dy));
            let weights = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
            if corners.iter().any(Option::is_none) {
                continue;
            }
            let value: f64 = corners.iter().zip(weights).map(|(k, w)| w * values[k.unwrap()]).sum();
            if corners.iter().all(|k| self.grid.active[k.unwrap()]) {
                return Some(value);
            }
            fallback.get_or_insert(value);
        }
        fallback
    }

    /// `u(a) = (1/2 delta) int_{-delta}^{delta} u(a + s nu(a)) ds` at each grid node
    /// of `M`, by Gauss-Legendre quadrature on bicubic interpolants.
    pub fn band_average_extract(&self, values: &[f64], grid: &ParameterGrid, points: usize) -> Result<ScalarField> {
        check_len(self.len(), values.len())?;
        let (xi, wi) = gauss_legendre(points);
        let c = self.chart.as_ref();
        let t = self.grid.time;
        let mut out = Vec::with_capacity(grid.nodes());
        for node in 0..grid.nodes() {
            let th = grid.theta(node);
            let a = c.position(th, t);
            let d1 = c.d_theta(th, t);
            let nu = outward(&(d1 / d1.norm()));
            let mut total = 0.0;
            for (x, w) in xi.iter().zip(&wi) {
                let p = a + (self.grid.delta * x) * nu;
                total += w * self.interpolate(values, &p).ok_or(Error::Extraction { node })?;
            }
            out.push(0.5 * total);
        }
        Ok(ScalarField::new(out, t))
    }

    /// Max over active nodes of `| |grad d| - 1 |` with central differences.
    pub fn eikonal_residual(&self) -> f64 {
        self.grid
            .active_nodes()
            .filter_map(|k| self.gradient(&self.field.d, k))
            .map(|g| (g.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Max over stored nodes of `|x - (a + d nu)|`.
    pub fn decomposition_residual(&self) -> f64 {
        (0..self.len())
            .map(|k| (self.grid.position(k) - self.field.a[k] - self.field.d[k] * self.field.nu[k]).norm())
            .fold(0.0, f64::max)
    }
}

/// Coefficients of the extended operator; `None` means identity metric or a
/// vanishing term.
#[derive(Clone, Debug, Default)]
pub struct ExtendedCoefficients {
    pub g: Option<Vec<Mat2>>,
    pub g_inv: Option<Vec<Mat2>>,
    pub w: Option<Vec<Vec2>>,
    pub c: Option<Vec<f64>>,
    pub u_t: Option<Vec<f64>>,
}

/// Max over active nodes of the difference between the divergence form
/// `(1/mu) div(mu A^-2 grad u)` and `D~ . D~ u + d^2u/dnu^2`.
pub fn os_operator_equivalence(band: &Band, values: &[f64]) -> Result<f64> {
    let lhs = band.os_operator(values)?;
    let rhs = band.extended_operator_apply(values, &ExtendedCoefficients::default())?;
    Ok(max_active_difference(band, &lhs, &rhs))
}

/// Max over active nodes of the difference between both sides of the
/// elliptic-part identity for `G = 1`.
pub fn elliptic_part_check(band: &Band, values: &[f64]) -> Result<f64> {
    let lhs = band.extended_operator_apply(values, &ExtendedCoefficients::default())?;
    let rhs = band.elliptic_part(values)?;
    Ok(max_active_difference(band, &lhs, &rhs))
}

pub fn max_active_difference(band: &Band, a: &[f64], b: &[f64]) -> f64 {
    band.grid.active_nodes().map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

/// Lagrange weights of the four nodes `-1, 0, 1, 2` at fractional offset `s`.
fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

/// Periodic four-point cubic Lagrange interpolation of nodal values at `theta`.
pub fn periodic_cubic(values: &[f64], theta: f64) -> f64 {
    let n = values.len();
    let f = wrap(theta) / (std::f64::consts::TAU / n as f64);
    let base = f.floor();
    let w = cubic_weights(f - base);
    let b = base as isize;
    (0..4).map(|j| w[j] * values[(b - 1 + j as isize).rem_euclid(n as isize) as usize]).sum()
}

/// Nodes and weights of the `q`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; q];
    let mut w = vec![0.0; q];
    for i in 0..q {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 0 { 1.0 } else { p1 };
            let pm = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (z * pq - pm) / (z * z - 1.0);
            let dz = pq / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Flat periodic strip `x1 in [0, L)` (periodic), `|x2| < delta` with
/// `delta = (J + 1/2) h` and one mirrored ghost row on each side.
#[derive(Clone, Debug)]
pub struct FlatStrip {
    pub n1: usize,
    pub half_rows: usize,
    pub h: f64,
}

impl FlatStrip {
    pub fn rows(&self) -> usize {
        2 * self.half_rows + 1
    }

    pub fn len(&self) -> usize {
        self.n1 * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn length(&self) -> f64 {
        self.n1 as f64 * self.h
    }

    pub fn delta(&self) -> f64 {
        (self.half_rows as f64 + 0.5) * self.h
    }

    fn index(&self, i: usize, row: usize) -> usize {
        row * self.n1 + i
    }

    /// Lift of 1D data constant along `x2`.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        (0..self.rows()).flat_map(|_| u.iter().copied()).collect()
    }

    /// Discrete band average over the rows.
    pub fn extract(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n1).map(|i| (0..self.rows()).map(|r| v[self.index(i, r)]).sum::<f64>() / self.rows() as f64).collect()
    }

    /// Five-point Laplacian with mirrored ghost rows (zero Neumann at `|x2| = delta`).
    fn laplacian_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let h2 = self.h * self.h;
        let mut m = DMatrix::zeros(n, n);
        for r in 0..self.rows() {
            for i in 0..self.n1 {
                let k = self.index(i, r);
                m[(k, k)] -= 4.0 / h2;
                m[(k, self.index((i + 1) % self.n1, r))] += 1.0 / h2;
                m[(k, self.index((i + self.n1 - 1) % self.n1, r))] += 1.0 / h2;
                let up = if r + 1 < self.rows() { r + 1 } else { r };
                let down = if r > 0 { r - 1 } else { r };
                m[(k, self.index(i, up))] += 1.0 / h2;
                m[(k, self.index(i, down))] += 1.0 / h2;
            }
        }
        m
    }

    /// One backward Euler step `(1/dt - Delta_h) u' = u/dt - f` with a dense LU solve.
    pub fn backward_euler_step(&self, u: &[f64], f: &[f64], dt: f64) -> Result<Vec<f64>> {
        check_len(self.len(), u.len())?;
        check_len(self.len(), f.len())?;
        let n = self.len();
        let system = DMatrix::identity(n, n) / dt - self.laplacian_matrix();
        let rhs = DVector::from_iterator(n, (0..n).map(|k| u[k] / dt - f[k]));
        let out = system.lu().solve(&rhs).ok_or(Error::SingularStep { level: 1 })?;
        Ok(out.as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::SurfaceFamily;
    use approx::assert_abs_diff_eq;

    fn circle_band(h: f64, delta: f64) -> Band {
        build_band(Arc::new(SurfaceFamily::unit_circle()), 0.0, h, delta).unwrap()
    }

    fn node_near(band: &Band, p: Vec2) -> usize {
        (0..band.len())
            .min_by(|&a, &b| {
                (band.grid.position(a) - p).norm().partial_cmp(&(band.grid.position(b) - p).norm()).unwrap()
            })
            .unwrap()
    }

    #[test]
    fn circle_distance_matches_closed_form() {
        let band = circle_band(1.0 / 32.0, 0.3);
        for k in 0..band.len() {
            let x = band.grid.position(k);
            assert_abs_diff_eq!(band.field.d[k], x.norm() - 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(band.field.a[k], x / x.norm(), epsilon = 1e-12);
        }
        let k = node_near(&band, Vec2::new(0.0, 1.25));
        assert_abs_diff_eq!(band.grid.position(k), Vec2::new(0.0, 1.25), epsilon = 1e-12);
        assert_abs_diff_eq!(band.field.a[k], Vec2::new(0.0, 1.0), epsilon = 1e-12);
        assert!(band.decomposition_residual() <= 1e-12);
    }

    #[test]
    fn a_matrix_at_offset_point() {
        // H = Hess d at x; at |x| = 1.25 the tangential eigenvalue of A is 1 / 1.25.
        let band = circle_band(1.0 / 32.0, 0.3);
        let k = node_near(&band, Vec2::new(0.0, 1.25));
        let tau = Vec2::new(-1.0, 0.0);
        assert_abs_diff_eq!(tau.dot(&(band.field.a_mat[k] * tau)), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(band.field.mu[k], 0.8, epsilon = 1e-12);
        for k in 0..band.len() {
            assert!((band.field.a_mat[k] * band.field.a_inv[k] - Mat2::identity()).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn band_limits_are_enforced() {
        let c: Arc<dyn Chart> = Arc::new(SurfaceFamily::unit_circle());
        assert!(matches!(build_band(c.clone(), 0.0, 0.05, 1.2), Err(Error::BandTooWide { .. })));
        assert!(matches!(build_band(c, 0.0, 0.1, 0.15), Err(Error::BandTooThin(_))));
    }

    #[test]
    fn gradient_relation_on_wide_band() {
        // u = cos theta = x1 on the circle; lift x1/|x|; at (0, 2) the gradient is (1/2, 0)
        // and the rescaled gradient is the surface gradient (1, 0).
        let band = build_band(Arc::new(SurfaceFamily::unit_circle()), 0.0, 1.0 / 64.0, 0.45).unwrap();
        let k = node_near(&band, Vec2::new(0.0, 1.4375));
        let x = band.grid.position(k);
        let lifted = band.lift_fn(f64::cos);
        let g = band.gradient(&lifted, k).unwrap();
        let r = x.norm();
        assert_abs_diff_eq!(g, Vec2::new(1.0 / r, 0.0), epsilon = 1e-3);
        let rg = band.rescaled_gradient(&lifted)[k].unwrap();
        assert_abs_diff_eq!(rg, Vec2::new(1.0, 0.0), epsilon = 1e-3);
    }

    #[test]
    fn constant_fields() {
        let band = circle_band(1.0 / 32.0, 0.2);
        let ones = vec![1.0; band.len()];
        let c = vec![0.7; band.len()];
        let out =
            band.extended_operator_apply(&ones, &ExtendedCoefficients { c: Some(c), ..Default::default() }).unwrap();
        for k in band.grid.active_nodes() {
            assert_abs_diff_eq!(out[k], -0.7, epsilon = 1e-12);
        }
        assert!(band.rescaled_gradient(&ones).iter().flatten().all(|g| g.norm() == 0.0));
        assert!(os_operator_equivalence(&band, &ones).unwrap() <= 1e-12);
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        let e = band.band_average_extract(&vec![2.5; band.len()], &grid, 8).unwrap();
        assert!(e.values.iter().all(|v| (v - 2.5).abs() <= 1e-12));
    }

    #[test]
    fn distance_is_odd_under_band_average() {
        let band = circle_band(1.0 / 64.0, 0.2);
        let grid = ParameterGrid::new(64, 4, 1.0).unwrap();
        let e = band.band_average_extract(&band.field.d, &grid, 8).unwrap();
        assert!(e.sup_norm() <= 1e-6, "{}", e.sup_norm());
    }

    #[test]
    fn distance_has_only_zero_order_response() {
        let band = circle_band(1.0 / 64.0, 0.2);
        let d = band.field.d.clone();
        let out = band.extended_operator_apply(&d, &ExtendedCoefficients::default()).unwrap();
        let err = band.grid.active_nodes().map(|k| out[k].abs()).fold(0.0, f64::max);
        assert!(err <= 1e-2, "{err}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        let p14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert_abs_diff_eq!(p14, 2.0 / 15.0, epsilon = 1e-14);
    }

    #[test]
    fn periodic_cubic_is_exact_on_nodes_and_wraps() {
        let grid = ParameterGrid::new(32, 4, 1.0).unwrap();
        let u = grid.sample(0.0, f64::cos);
        assert_abs_diff_eq!(periodic_cubic(&u.values, grid.theta(5)), u.values[5], epsilon = 1e-15);
        assert_abs_diff_eq!(periodic_cubic(&u.values, 6.2), 6.2f64.cos(), epsilon = 1e-4);
        assert_abs_diff_eq!(periodic_cubic(&u.values, -0.1), (-0.1f64).cos(), epsilon = 1e-4);
    }

    #[test]
    fn ghost_fill_converges_at_second_order() {
        let err = |h: f64| {
            let band = circle_band(h, 0.2);
            let exact = band.lift_fn(|t| (2.0 * t).sin());
            let mut v = exact.clone();
            for (k, value) in v.iter_mut().enumerate() {
                if !band.grid.active[k] {
                    *value = 0.0;
                }
            }
            band.fill_ghosts(&mut v);
            v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(1.0 / 32.0), err(1.0 / 64.0));
        assert!(fine <= 5e-3 && coarse / fine >= 3.0, "{coarse} {fine}");
    }

    #[test]
    fn flat_strip_keeps_lifts_normal_constant() {
        let strip = FlatStrip { n1: 16, half_rows: 2, h: 0.1 };
        let u: Vec<f64> = (0..16).map(|i| (i as f64 * 0.4).sin()).collect();
        let next = strip.backward_euler_step(&strip.lift(&u), &vec![0.0; strip.len()], 0.01).unwrap();
        for r in 1..strip.rows() {
            for i in 0..16 {
                assert_abs_diff_eq!(next[r * 16 + i], next[i], epsilon = 1e-13);
            }
        }
    }

    fn generic(band: &Band) -> Vec<f64> {
        (0..band.len())
            .map(|k| {
                let x = band.grid.position(k);
                (2.0 * x.x).sin() * x.y.cos() + x.x * x.y * x.y
            })
            .collect()
    }

    #[test]
    fn band_identities_converge_at_second_order() {
        let errors = |h: f64| {
            let band = circle_band(h, 0.2);
            let u = band.lift_fn(|t| (3.0 * t).cos());
            let exact = band.lift_fn(|t| -9.0 * (3.0 * t).cos());
            let l = band.extended_operator_apply(&u, &ExtendedCoefficients::default()).unwrap();
            let g = generic(&band);
            [
                max_active_difference(&band, &l, &exact),
                os_operator_equivalence(&band, &g).unwrap(),
                elliptic_part_check(&band, &g).unwrap(),
            ]
        };
        let (coarse, fine) = (errors(1.0 / 32.0), errors(1.0 / 64.0));
        for (c, f) in coarse.iter().zip(&fine) {
            let order = (c / f).log2();
            assert!((1.7..=2.3).contains(&order), "{c:e} {f:e} {order}");
        }
    }
}
