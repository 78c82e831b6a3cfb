//! Natural cubic spline interpolation on strictly increasing knots.

use crate::error::{Error, Result};

/// Natural cubic spline (zero second derivative at both end knots).
///
/// Outside the knot range the spline continues linearly with the end slope,
/// which is the unique C2 extension of a natural spline.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Interpolation(format!(
                "knot count mismatch: {} abscissae, {} ordinates",
                x.len(),
                y.len()
            )));
        }
        let n = x.len();
        if n < 2 {
            return Err(Error::Interpolation(format!("need at least 2 knots, got {n}")));
        }
        if x.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0]) {
            return Err(Error::Interpolation("knots must be strictly increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Interpolation("non-finite knot value".into()));
        }

        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for j in 1..k {
                let lower = x[j + 1] - x[j];
                let w = lower / diag[j - 1];
                diag[j] -= w * upper[j - 1];
                rhs[j] -= w * rhs[j - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for j in (0..k - 1).rev() {
                sol[j] = (rhs[j] - upper[j] * sol[j + 1]) / diag[j];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }

        Ok(NaturalSpline {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.slope_at(0) * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.slope_at(n - 1) * (t - self.x[n - 1]);
        }
        // partition_point gives the first knot strictly greater than t.
        let i = self.x.partition_point(|&k| k <= t) - 1;
        if t == self.x[i] {
            return self.y[i];
        }
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn slope_at(&self, i: usize) -> f64 {
        let n = self.x.len();
        if i == 0 {
            let h = self.x[1] - self.x[0];
            (self.y[1] - self.y[0]) / h - h * (2.0 * self.m[0] + self.m[1]) / 6.0
        } else {
            let h = self.x[n - 1] - self.x[n - 2];
            (self.y[n - 1] - self.y[n - 2]) / h + h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0
        }
    }
}
