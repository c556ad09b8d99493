//! Resampling of one-dimensional signals from a fixed non-uniform abscissa
//! onto fixed target positions. Abscissa-only work (interval search, spline
//! factorisation) is done once and reused for every A-line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    /// Natural cubic spline.
    #[default]
    Cubic,
}

#[derive(Debug, Clone)]
pub struct Resampler {
    method: Interpolation,
    x: Vec<f64>,
    /// Segment index and local coordinate of each target.
    segments: Vec<(usize, f64)>,
    // Thomas factorisation of the natural-spline system (interior knots).
    sub: Vec<f64>,
    sup_prime: Vec<f64>,
    denom: Vec<f64>,
}

impl Resampler {
    pub fn new(x: &[f64], targets: &[f64], method: Interpolation) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return Err(Error::InvalidParameter(
                "resampling needs at least 3 knots".into(),
            ));
        }
        crate::grid::check_increasing(x)?;
        let mut segments = Vec::with_capacity(targets.len());
        let mut seg = 0;
        for &t in targets {
            // targets are usually sorted; fall back to bisection otherwise
            if seg + 1 >= n || t < x[seg] {
                seg = x.partition_point(|&v| v <= t).saturating_sub(1);
            }
            while seg + 2 < n && t >= x[seg + 1] {
                seg += 1;
            }
            let seg = seg.min(n - 2);
            let h = x[seg + 1] - x[seg];
            let mut dx = t - x[seg];
            // targets within rounding of a knot reproduce the knot value
            if dx.abs() <= 1e-9 * h {
                dx = 0.0;
            } else if (dx - h).abs() <= 1e-9 * h {
                dx = h;
            }
            segments.push((seg, dx));
        }

        let (mut sub, mut sup_prime, mut denom) = (Vec::new(), Vec::new(), Vec::new());
        if method == Interpolation::Cubic && n > 2 {
            let m = n - 2;
            sub.reserve(m);
            sup_prime.reserve(m);
            denom.reserve(m);
            for i in 1..=m {
                let h_prev = x[i] - x[i - 1];
                let h = x[i + 1] - x[i];
                let a = if i == 1 { 0.0 } else { h_prev };
                let b = 2.0 * (h_prev + h);
                let c = if i == m { 0.0 } else { h };
                let d = b - a * sup_prime.last().copied().unwrap_or(0.0);
                sub.push(a);
                denom.push(d);
                sup_prime.push(c / d);
            }
        }
        Ok(Self {
            method,
            x: x.to_vec(),
            segments,
            sub,
            sup_prime,
            denom,
        })
    }

    pub fn n_targets(&self) -> usize {
        self.segments.len()
    }

    /// Resample `y` (values at the knots) into `out` (values at the targets).
    pub fn apply(&self, y: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.x.len(), "sample count differs from knot count");
        assert_eq!(out.len(), self.segments.len(), "output length differs from targets");
        let x = &self.x;
        match self.method {
            Interpolation::Linear => {
                for (o, &(i, dx)) in out.iter_mut().zip(&self.segments) {
                    let h = x[i + 1] - x[i];
                    *o = y[i] + (y[i + 1] - y[i]) * (dx / h);
                }
            }
            Interpolation::Cubic => {
                let m2 = self.second_derivatives(y);
                for (o, &(i, dx)) in out.iter_mut().zip(&self.segments) {
                    let h = x[i + 1] - x[i];
                    let b = dx / h;
                    let a = 1.0 - b;
                    *o = a * y[i]
                        + b * y[i + 1]
                        + ((a * a * a - a) * m2[i] + (b * b * b - b) * m2[i + 1]) * (h * h)
                            / 6.0;
                }
            }
        }
    }

    fn second_derivatives(&self, y: &[f64]) -> Vec<f64> {
        let x = &self.x;
        let n = x.len();
        let m = n - 2;
        let mut dp = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let h_prev = x[i] - x[i - 1];
            let h = x[i + 1] - x[i];
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h - (y[i] - y[i - 1]) / h_prev);
            let prev = if k == 0 { 0.0 } else { dp[k - 1] };
            dp[k] = (rhs - self.sub[k] * prev) / self.denom[k];
        }
        let mut m2 = vec![0.0; n];
        for k in (0..m).rev() {
            m2[k + 1] = dp[k] - self.sup_prime[k] * m2[k + 2];
        }
        m2
    }
}
