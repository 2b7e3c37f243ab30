//! Sample summaries used by the experiment reports.

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 when `n < 2`.
    pub sd: f64,
    /// `sd / sqrt(n)`.
    pub se: f64,
}

impl Summary {
    /// Summary of `xs`; the mean of an empty sample is NaN.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                sd: 0.0,
                se: 0.0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            n,
            mean,
            sd,
            se: sd / (n as f64).sqrt(),
        }
    }

    pub fn of_iter(xs: impl IntoIterator<Item = f64>) -> Self {
        Self::of(&xs.into_iter().collect::<Vec<_>>())
    }

    /// `(mean - target) / se`; infinite when `se == 0` and the mean differs.
    pub fn z(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.se > 0.0 {
            d / self.se
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}
