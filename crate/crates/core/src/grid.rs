//! Spectrometer sampling: the wavelength axis seen by the detector and the
//! uniform wavenumber axis the reconstruction works on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact, serializable description of a spectrometer linear in wavelength.
///
/// The wavenumber span is chosen so that one FFT bin of the positive-depth
/// half corresponds to `axial_pixel_um` of single-pass depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_k: usize,
    pub center_wavelength_um: f64,
    pub axial_pixel_um: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_k: 2048,
            center_wavelength_um: 0.850,
            axial_pixel_um: 1.5,
        }
    }
}

impl GridSpec {
    /// Desk-scale grid producing 256-pixel-deep B-scans.
    pub fn desk() -> Self {
        Self {
            n_k: 512,
            ..Self::default()
        }
    }

    pub fn build(&self) -> Result<WavenumberGrid> {
        WavenumberGrid::new(self.n_k, self.center_wavelength_um, self.axial_pixel_um)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberGrid {
    lambda_samples: Vec<f64>,
    k_uniform: Vec<f64>,
    k0: f64,
}

impl WavenumberGrid {
    /// Spectrometer sampled linearly in wavelength, centred (in wavenumber) on
    /// `center_wavelength_um`.
    pub fn new(n_k: usize, center_wavelength_um: f64, axial_pixel_um: f64) -> Result<Self> {
        if n_k < 4 || !n_k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_k must be even and >= 4, got {n_k}"
            )));
        }
        if !(center_wavelength_um > 0.0 && axial_pixel_um > 0.0) {
            return Err(Error::InvalidParameter(
                "center wavelength and axial pixel must be positive".into(),
            ));
        }
        let k0 = 2.0 * PI / center_wavelength_um;
        let dk = PI / (n_k as f64 * axial_pixel_um);
        let k_min = k0 - dk * (n_k - 1) as f64 / 2.0;
        if k_min <= 0.0 {
            return Err(Error::InvalidParameter(
                "axial pixel too small for the requested centre wavelength".into(),
            ));
        }
        let k_max = k0 + dk * (n_k - 1) as f64 / 2.0;
        let (l_min, l_max) = (2.0 * PI / k_max, 2.0 * PI / k_min);
        let step = (l_max - l_min) / (n_k - 1) as f64;
        let lambda_samples = (0..n_k).map(|j| l_min + step * j as f64).collect();
        let k_uniform = (0..n_k).map(|j| k_min + dk * j as f64).collect();
        Ok(Self {
            lambda_samples,
            k_uniform,
            k0,
        })
    }

    /// Grid for an arbitrary calibrated spectrometer. The uniform axis spans
    /// the same wavenumber interval with the same number of samples.
    pub fn from_lambda_samples(lambda_samples: Vec<f64>) -> Result<Self> {
        let n_k = lambda_samples.len();
        if n_k < 4 || !n_k.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_k must be even and >= 4, got {n_k}"
            )));
        }
        check_increasing(&lambda_samples)?;
        if lambda_samples[0] <= 0.0 {
            return Err(Error::InvalidParameter("wavelengths must be positive".into()));
        }
        let k_min = 2.0 * PI / lambda_samples[n_k - 1];
        let k_max = 2.0 * PI / lambda_samples[0];
        let dk = (k_max - k_min) / (n_k - 1) as f64;
        let k_uniform = (0..n_k).map(|j| k_min + dk * j as f64).collect();
        Ok(Self {
            lambda_samples,
            k_uniform,
            k0: 0.5 * (k_min + k_max),
        })
    }

    pub fn n_k(&self) -> usize {
        self.k_uniform.len()
    }

    /// Number of positive-depth pixels in a reconstructed A-scan.
    pub fn n_z(&self) -> usize {
        self.n_k() / 2
    }

    pub fn lambda_samples(&self) -> &[f64] {
        &self.lambda_samples
    }

    pub fn k_uniform(&self) -> &[f64] {
        &self.k_uniform
    }

    /// Wavenumber of each detector pixel, `2π/λ` (descending).
    pub fn k_detector(&self) -> Vec<f64> {
        self.lambda_samples.iter().map(|l| 2.0 * PI / l).collect()
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn dk(&self) -> f64 {
        self.k_uniform[1] - self.k_uniform[0]
    }

    /// Half of the full wavenumber span; the normalisation of `u`.
    pub fn half_span(&self) -> f64 {
        0.5 * (self.k_uniform[self.n_k() - 1] - self.k_uniform[0])
    }

    /// Single-pass depth per reconstructed pixel.
    pub fn axial_pixel_um(&self) -> f64 {
        PI / (self.n_k() as f64 * self.dk())
    }

    pub fn u_of_k(&self, k: f64) -> f64 {
        (k - self.k0) / self.half_span()
    }

    /// Pixel-normalised coordinate of uniform sample `j`, in `[-1, 1]`.
    pub fn u(&self, j: usize) -> f64 {
        self.u_of_k(self.k_uniform[j])
    }

    pub fn u_axis(&self) -> Vec<f64> {
        (0..self.n_k()).map(|j| self.u(j)).collect()
    }
}

pub(crate) fn check_increasing(values: &[f64]) -> Result<()> {
    for (i, w) in values.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneWavelength { index: i + 1 });
        }
    }
    Ok(())
}
