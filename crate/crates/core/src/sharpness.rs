//! Image sharpness scores used to rank dispersion-coefficient candidates.
//! Both metrics report higher values for sharper images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{BScan, Scale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharpnessMetric {
    /// Total energy divided by the number of pixels above `τ·max`.
    ThresholdCount,
    /// Negated Shannon entropy of the normalised intensity distribution.
    #[default]
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharpnessConfig {
    pub metric: SharpnessMetric,
    pub threshold_fraction: f64,
}

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            metric: SharpnessMetric::Entropy,
            threshold_fraction: 0.1,
        }
    }
}

impl SharpnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(Error::OutOfRange(format!(
                "threshold fraction {} outside (0, 1)",
                self.threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Rows of the image a score is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Region {
    #[default]
    Full,
    /// Depth rows `[start, end)`.
    Depth { start: usize, end: usize },
}

pub fn sharpness(b: &BScan, cfg: &SharpnessConfig, region: Region) -> Result<f64> {
    cfg.validate()?;
    if b.scale != Scale::Linear {
        return Err(Error::Scale("sharpness needs a linear image".into()));
    }
    let (start, end) = match region {
        Region::Full => (0, b.n_z()),
        Region::Depth { start, end } => (start, end.min(b.n_z())),
    };
    if start >= end || b.n_alines() == 0 {
        return Err(Error::Empty("sharpness region"));
    }
    let view = b.pixels.slice(ndarray::s![start..end, ..]);
    let max = view.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::ZeroImage);
    }
    match cfg.metric {
        SharpnessMetric::ThresholdCount => {
            let threshold = cfg.threshold_fraction * max;
            let (energy, count) = view.iter().fold((0.0, 0usize), |(e, c), &v| {
                (e + v * v, c + usize::from(v > threshold))
            });
            Ok(energy / count as f64)
        }
        SharpnessMetric::Entropy => {
            let total: f64 = view.iter().map(|v| v.abs()).sum();
            let entropy: f64 = view
                .iter()
                .map(|v| v.abs() / total)
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.ln())
                .sum();
            Ok(-entropy)
        }
    }
}
