//! Direct solver for the cyclic tridiagonal systems produced by the 1D stepper.

/// Periodic tridiagonal matrix. Row `i` reads
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]` with wrapped indices.
#[derive(Clone, Debug)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| self.lower[i] * x[(i + n - 1) % n] + self.diag[i] * x[i] + self.upper[i] * x[(i + 1) % n])
            .collect()
    }

    /// Sherman-Morrison reduction to two plain tridiagonal solves.
    /// Returns `None` when a pivot vanishes or the result is not finite.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        debug_assert!(n >= 3 && rhs.len() == n);
        let gamma = -self.diag[0];
        if gamma == 0.0 {
            return None;
        }
        let corner_low = self.lower[0];
        let corner_up = self.upper[n - 1];

        let mut diag = self.diag.clone();
        diag[0] -= gamma;
        diag[n - 1] -= corner_low * corner_up / gamma;

        let y = thomas(&self.lower, &diag, &self.upper, rhs)?;
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner_up;
        let z = thomas(&self.lower, &diag, &self.upper, &u)?;

        let v_last = corner_low / gamma;
        let vy = y[0] + v_last * y[n - 1];
        let vz = z[0] + v_last * z[n - 1];
        let denom = 1.0 + vz;
        if denom == 0.0 {
            return None;
        }
        let factor = vy / denom;
        let x: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect();
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}

/// Plain tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = upper[i] / beta;
        }
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}
