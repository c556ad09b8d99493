use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

/// Sampling domain of a spectrogram's spectral axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Wavelength,
    KLinear,
}

/// Raw interference fringes, `n_k` spectral samples by `n_a` A-lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub data: Array2<f64>,
    pub domain: Domain,
    pub background_removed: bool,
}

impl Spectrogram {
    pub fn new(data: Array2<f64>, domain: Domain) -> Self {
        Self {
            data,
            domain,
            background_removed: false,
        }
    }

    pub fn n_k(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_alines(&self) -> usize {
        self.data.ncols()
    }

    pub fn check_grid(&self, grid: &WavenumberGrid) -> Result<()> {
        if self.n_k() != grid.n_k() {
            return Err(Error::dims(
                format!("{} spectral samples", grid.n_k()),
                format!("{}", self.n_k()),
            ));
        }
        if self.n_alines() == 0 {
            return Err(Error::Empty("spectrogram has no A-lines"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    LogDb,
}

/// Reconstructed image, depth (rows) by lateral position (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    pub pixels: Array2<f64>,
    pub scale: Scale,
    pub axial_pixel_um: f64,
}

impl BScan {
    pub fn linear(pixels: Array2<f64>, axial_pixel_um: f64) -> Self {
        Self {
            pixels,
            scale: Scale::Linear,
            axial_pixel_um,
        }
    }

    pub fn n_z(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn n_alines(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn max(&self) -> f64 {
        self.pixels.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
