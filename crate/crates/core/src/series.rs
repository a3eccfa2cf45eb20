//! Uniformly sampled scalar trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples `values[i]` at `start + i * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {step}")));
        }
        Ok(Self { start, step, values })
    }

    pub fn from_fn(start: f64, step: f64, len: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..len).map(|i| f(start + i as f64 * step)).collect();
        Self { start, step, values }
    }

    pub fn zeros(start: f64, step: f64, len: usize) -> Self {
        Self { start, step, values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// Linear interpolation; clamps to the end values outside the sampled range.
    pub fn sample(&self, t: f64) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let s = (t - self.start) / self.step;
        if s <= 0.0 {
            return self.values[0];
        }
        let i = s.floor() as usize;
        if i + 1 >= n {
            return self.values[n - 1];
        }
        let w = s - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Centered differences inside, second-order one-sided at the ends.
    pub fn derivative(&self) -> TimeSeries {
        let n = self.len();
        let h = self.step;
        let v = &self.values;
        let mut d = vec![0.0; n];
        if n >= 3 {
            d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
            d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
            for i in 1..n - 1 {
                d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
            }
        } else if n == 2 {
            d[0] = (v[1] - v[0]) / h;
            d[1] = d[0];
        }
        TimeSeries { start: self.start, step: h, values: d }
    }

    /// Trapezoid rule over the whole record.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.step)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries { start: self.start, step: self.step, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Composite trapezoid rule for uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid weights (half weight at both ends) scaled by the step.
pub fn trapezoid_weights(n: usize, step: f64) -> Vec<f64> {
    let mut w = vec![step; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_interpolates_linearly() {
        let s = TimeSeries::from_fn(0.0, 0.5, 5, |t| 2.0 * t);
        assert!((s.sample(0.75) - 1.5).abs() < 1e-15);
        assert_eq!(s.sample(-1.0), 0.0);
        assert_eq!(s.sample(10.0), 4.0);
    }

    #[test]
    fn derivative_exact_for_quadratics() {
        let s = TimeSeries::from_fn(0.0, 0.1, 30, |t| t * t - t);
        let d = s.derivative();
        for (i, v) in d.values.iter().enumerate() {
            assert!((v - (2.0 * s.time(i) - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let s = TimeSeries::from_fn(1.0, 0.25, 9, |t| 3.0 * t + 1.0);
        assert!((s.integral() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(TimeSeries::new(0.0, 0.0, vec![]).is_err());
    }
}
