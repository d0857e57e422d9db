//! Periodic parameter grid and the scalar fields that live on it.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Equispaced nodes `theta_i = 2 pi i / N` and time levels `t_k = k T / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterGrid {
    nodes: usize,
    steps: usize,
    period: f64,
}

impl ParameterGrid {
    pub const MIN_NODES: usize = 8;
    pub const MIN_STEPS: usize = 4;

    pub fn new(nodes: usize, steps: usize, period: f64) -> Result<Self> {
        if nodes < Self::MIN_NODES {
            return Err(Error::InvalidGrid(format!("N = {nodes} < {}", Self::MIN_NODES)));
        }
        if steps < Self::MIN_STEPS {
            return Err(Error::InvalidGrid(format!("M = {steps} < {}", Self::MIN_STEPS)));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period T = {period} must be positive")));
        }
        Ok(Self { nodes, steps, period })
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        TAU / self.nodes as f64
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.period / self.steps as f64
    }

    #[inline]
    pub fn theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.nodes as f64
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.period
        } else {
            self.period * k as f64 / self.steps as f64
        }
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.theta(i)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Samples `f(theta)` at every node.
    pub fn sample(&self, t: f64, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::new((0..self.nodes).map(|i| f(self.theta(i))).collect(), t)
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(self.nodes, steps, self.period)
    }

    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        Self::new(nodes, self.steps, self.period)
    }
}

/// Values of an unknown at the grid nodes at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl ScalarField {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    pub fn constant(nodes: usize, value: f64, time: f64) -> Self {
        Self::new(vec![value; nodes], time)
    }

    pub fn zeros(nodes: usize, time: f64) -> Self {
        Self::constant(nodes, 0.0, time)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        check_len(expected, self.values.len())
    }
}

/// One [`ScalarField`] per time level `t_0 = 0, ..., t_M = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub levels: Vec<ScalarField>,
}

impl SpaceTimeField {
    pub fn new(levels: Vec<ScalarField>) -> Self {
        Self { levels }
    }

    /// Samples `f(theta, t)` on every node and time level of `grid`.
    pub fn sample(grid: &ParameterGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let levels = grid.times().into_iter().map(|t| grid.sample(t, |th| f(th, t))).collect();
        Self { levels }
    }

    pub fn zeros(grid: &ParameterGrid) -> Self {
        Self::sample(grid, |_, _| 0.0)
    }

    #[inline]
    pub fn steps(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn nodes(&self) -> usize {
        self.levels.first().map_or(0, ScalarField::len)
    }

    pub fn first(&self) -> &ScalarField {
        &self.levels[0]
    }

    pub fn last(&self) -> &ScalarField {
        self.levels.last().expect("empty trajectory")
    }

    pub fn times(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.time).collect()
    }

    /// Reverses the level order and maps each time stamp to `T - t`.
    pub fn time_reversed(&self) -> Self {
        let period = self.last().time;
        let levels = self.levels.iter().rev().map(|l| ScalarField::new(l.values.clone(), period - l.time)).collect();
        Self { levels }
    }

    /// Sup-norm distance over all levels.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        self.levels.iter().zip(&other.levels).map(|(a, b)| max_abs_diff(&a.values, &b.values)).fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.levels.iter().map(ScalarField::sup_norm).fold(0.0, f64::max)
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Second-order central difference `dU/dtheta` on a periodic grid.
pub(crate) fn periodic_derivative(values: &[f64], dtheta: f64) -> Vec<f64> {
    let n = values.len();
    (0..n).map(|i| (values[(i + 1) % n] - values[(i + n - 1) % n]) / (2.0 * dtheta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_small_sizes() {
        assert!(ParameterGrid::new(7, 8, 1.0).is_err());
        assert!(ParameterGrid::new(8, 3, 1.0).is_err());
        assert!(ParameterGrid::new(8, 4, 0.0).is_err());
        assert!(ParameterGrid::new(8, 4, 1.0).is_ok());
    }

    #[test]
    fn last_time_is_period_exactly() {
        let g = ParameterGrid::new(16, 7, 0.3).unwrap();
        assert_eq!(g.time(7), 0.3);
        assert_eq!(g.times().len(), 8);
    }

    #[test]
    fn time_reversal_flips_levels() {
        let g = ParameterGrid::new(8, 4, 2.0).unwrap();
        let f = SpaceTimeField::sample(&g, |th, t| th + 10.0 * t);
        let r = f.time_reversed();
        assert_eq!(r.levels[0].values, f.levels[4].values);
        assert_eq!(r.levels[0].time, 0.0);
        assert_eq!(r.levels[4].time, 2.0);
    }
}
