//! Natural cubic spline on a strictly increasing grid.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    /// Builds the interpolant; `x` must be strictly increasing with at least
    /// two points.
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the second derivatives.
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (r - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        CubicSpline { x, y, m }
    }

    pub fn lower(&self) -> f64 {
        self.x[0]
    }

    pub fn upper(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Evaluates the spline; outside the grid the end segments extrapolate
    /// linearly.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let x = &self.x;
        if t <= x[0] {
            let h = x[1] - x[0];
            let slope = (self.y[1] - self.y[0]) / h - h * (2.0 * self.m[0] + self.m[1]) / 6.0;
            return self.y[0] + slope * (t - x[0]);
        }
        if t >= x[n - 1] {
            let h = x[n - 1] - x[n - 2];
            let slope = (self.y[n - 1] - self.y[n - 2]) / h + h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0;
            return self.y[n - 1] + slope * (t - x[n - 1]);
        }
        let i = x.partition_point(|&v| v <= t) - 1;
        let h = x[i + 1] - x[i];
        let a = (x[i + 1] - t) / h;
        let b = (t - x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_function() {
        let x: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let s = CubicSpline::natural(x, y);
        for k in 0..97 {
            let t = -4.0 + 0.0831 * k as f64;
            assert!((s.eval(t) - t.sin()).abs() < 2e-6, "t={t}");
        }
    }

    #[test]
    fn linear_data_is_exact() {
        let s = CubicSpline::natural(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 7.0]);
        assert!((s.eval(2.0) - 5.0).abs() < 1e-12);
        assert!((s.eval(5.0) - 11.0).abs() < 1e-12);
        assert!((s.eval(-1.0) + 1.0).abs() < 1e-12);
    }
}
