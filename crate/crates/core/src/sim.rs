//! Forward model: dispersive spectral interferograms of layered phantoms.
//!
//! Each layer at single-pass depth `z` contributes a fringe
//! `2·P·r·E(k)·cos(2kz + a2·u² + a3·u³)` on top of the reference spectrum
//! `P·E(k)`, where `E` is the source envelope and `r` the layer's amplitude
//! reflectivity. Sample autocorrelation terms are not modelled.

use std::f64::consts::{LN_2, PI};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dispersion::DispersionCoefficients;
use crate::error::{Error, Result};
use crate::frame::{Domain, Spectrogram};
use crate::grid::WavenumberGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    pub center_wavelength_um: f64,
    pub fwhm_bandwidth_um: f64,
    /// Peak reference-arm intensity on the detector, in counts.
    pub reference_power: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            center_wavelength_um: 0.840,
            fwhm_bandwidth_um: 0.055,
            reference_power: 1000.0,
        }
    }
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength_um > 0.0 && self.fwhm_bandwidth_um > 0.0) {
            return Err(Error::InvalidParameter(
                "source wavelength and bandwidth must be positive".into(),
            ));
        }
        if !(self.reference_power > 0.0) {
            return Err(Error::InvalidParameter("reference power must be positive".into()));
        }
        Ok(())
    }

    pub fn center_k(&self) -> f64 {
        2.0 * PI / self.center_wavelength_um
    }

    /// Envelope FWHM expressed in wavenumber.
    pub fn fwhm_k(&self) -> f64 {
        2.0 * PI * self.fwhm_bandwidth_um / self.center_wavelength_um.powi(2)
    }

    /// Gaussian spectral envelope, unit peak.
    pub fn envelope(&self, k: f64) -> f64 {
        let d = (k - self.center_k()) / self.fwhm_k();
        (-4.0 * LN_2 * d * d).exp()
    }
}

/// Axial resolution limit of a Gaussian source, `(2·ln2/π)·λ0²/Δλ` in µm.
pub fn transform_limited_fwhm(source: &SourceSpec) -> f64 {
    2.0 * LN_2 / PI * source.center_wavelength_um.powi(2) / source.fwhm_bandwidth_um
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomLayer {
    /// Single-pass depth; the optical path difference is twice this.
    pub depth_um: f64,
    /// Amplitude reflectivity in `(0, 1]`.
    pub reflectivity: f64,
    #[serde(default)]
    pub a2_sample: f64,
    #[serde(default)]
    pub a3_sample: f64,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
}

fn default_group_index() -> f64 {
    1.38
}

impl PhantomLayer {
    pub fn new(depth_um: f64, reflectivity: f64, a2_sample: f64) -> Self {
        Self {
            depth_um,
            reflectivity,
            a2_sample,
            a3_sample: 0.0,
            group_index: default_group_index(),
        }
    }

    pub fn dispersion(&self) -> DispersionCoefficients {
        DispersionCoefficients {
            a2: self.a2_sample,
            a3: self.a3_sample,
        }
    }

    pub fn geometric_depth_um(&self) -> f64 {
        self.depth_um / self.group_index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    #[default]
    Constant,
    /// Smooth random reflectivity factor in `[1 - amplitude, 1 + amplitude]`.
    SmoothRandom { amplitude: f64, seed: u64 },
}

/// Per-A-line variation of the phantom. Depth offsets (pixels) follow
/// `tilt·t + curvature·t²` with `t ∈ [-1, 1]` across the frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LateralProfile {
    pub modulation: Modulation,
    pub tilt_px: f64,
    pub curvature_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phantom {
    pub layers: Vec<PhantomLayer>,
    #[serde(default)]
    pub lateral: LateralProfile,
    #[serde(default = "default_alines")]
    pub n_alines: usize,
}

fn default_alines() -> usize {
    300
}

impl Phantom {
    pub fn new(layers: Vec<PhantomLayer>, n_alines: usize) -> Self {
        Self {
            layers,
            lateral: LateralProfile::default(),
            n_alines,
        }
    }

    pub fn single(depth_um: f64, reflectivity: f64, a2_sample: f64, n_alines: usize) -> Self {
        Self::new(vec![PhantomLayer::new(depth_um, reflectivity, a2_sample)], n_alines)
    }

    fn lateral_t(&self, x: usize) -> f64 {
        if self.n_alines <= 1 {
            0.0
        } else {
            2.0 * x as f64 / (self.n_alines - 1) as f64 - 1.0
        }
    }

    /// Depth offset of A-line `x`, in pixels.
    pub fn offset_px(&self, x: usize) -> f64 {
        let t = self.lateral_t(x);
        self.lateral.tilt_px * t + self.lateral.curvature_px * t * t
    }

    /// Reflectivity multiplier of every A-line.
    pub fn modulation(&self) -> Vec<f64> {
        match self.lateral.modulation {
            Modulation::Constant => vec![1.0; self.n_alines],
            Modulation::SmoothRandom { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let terms: Vec<(f64, f64, f64)> = (0..4)
                    .map(|i| {
                        let weight = rng.random_range(0.5..1.0) / (i + 1) as f64;
                        let cycles = rng.random_range(0.3..2.5) * (i + 1) as f64;
                        let phase = rng.random_range(0.0..2.0 * PI);
                        (weight, cycles, phase)
                    })
                    .collect();
                let norm: f64 = terms.iter().map(|t| t.0).sum();
                (0..self.n_alines)
                    .map(|x| {
                        let t = 0.5 * (self.lateral_t(x) + 1.0);
                        let g: f64 = terms
                            .iter()
                            .map(|&(w, c, p)| w * (2.0 * PI * c * t + p).cos())
                            .sum();
                        1.0 + amplitude * g / norm
                    })
                    .collect()
            }
        }
    }

    pub fn validate(&self, grid: &WavenumberGrid) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Empty("phantom has no layers"));
        }
        if self.n_alines == 0 {
            return Err(Error::Empty("phantom has no A-lines"));
        }
        if let Modulation::SmoothRandom { amplitude, .. } = self.lateral.modulation {
            if !(0.0..1.0).contains(&amplitude) {
                return Err(Error::InvalidParameter(format!(
                    "modulation amplitude {amplitude} outside [0, 1)"
                )));
            }
        }
        let pix = grid.axial_pixel_um();
        let max_depth = grid.n_z() as f64 * pix;
        let (mut lo_off, mut hi_off) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in 0..self.n_alines {
            let o = self.offset_px(x) * pix;
            lo_off = lo_off.min(o);
            hi_off = hi_off.max(o);
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.reflectivity > 0.0 && l.reflectivity <= 1.0) {
                return Err(Error::OutOfRange(format!(
                    "layer {i} reflectivity {} outside (0, 1]",
                    l.reflectivity
                )));
            }
            if !(l.group_index > 0.0) {
                return Err(Error::InvalidParameter(format!("layer {i} group index must be > 0")));
            }
            l.dispersion().validate(f64::INFINITY)?;
            if !(l.depth_um + lo_off > 0.0 && l.depth_um + hi_off < max_depth) {
                return Err(Error::OutOfRange(format!(
                    "layer {i} at {} µm leaves the depth range (0, {max_depth}) µm",
                    l.depth_um
                )));
            }
            if i > 0 && !(l.depth_um > self.layers[i - 1].depth_um) {
                return Err(Error::InvalidParameter(
                    "layers must be sorted by strictly increasing depth".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Additive Gaussian noise, detector counts.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }
}

fn sample_wavenumbers(grid: &WavenumberGrid, domain: Domain) -> Vec<f64> {
    match domain {
        Domain::Wavelength => grid.k_detector(),
        Domain::KLinear => grid.k_uniform().to_vec(),
    }
}

/// Reference-arm spectrum `P·E(k)` on the requested sampling axis.
pub fn reference_spectrum(source: &SourceSpec, grid: &WavenumberGrid, domain: Domain) -> Vec<f64> {
    sample_wavenumbers(grid, domain)
        .into_iter()
        .map(|k| source.reference_power * source.envelope(k))
        .collect()
}

/// Interference term only; linear in the layer set.
pub fn synthesize_fringes(
    phantom: &Phantom,
    source: &SourceSpec,
    grid: &WavenumberGrid,
    domain: Domain,
) -> Result<Array2<f64>> {
    source.validate()?;
    phantom.validate(grid)?;
    let ks = sample_wavenumbers(grid, domain);
    let amp: Vec<f64> = ks
        .iter()
        .map(|&k| 2.0 * source.reference_power * source.envelope(k))
        .collect();
    let us: Vec<f64> = ks.iter().map(|&k| grid.u_of_k(k)).collect();
    let pix = grid.axial_pixel_um();
    let modulation = phantom.modulation();
    let mut data = Array2::<f64>::zeros((ks.len(), phantom.n_alines));
    for (x, mut col) in data.columns_mut().into_iter().enumerate() {
        let offset_um = phantom.offset_px(x) * pix;
        for layer in &phantom.layers {
            let z = layer.depth_um + offset_um;
            let r = layer.reflectivity * modulation[x];
            let disp = layer.dispersion();
            for (j, v) in col.iter_mut().enumerate() {
                *v += amp[j] * r * (2.0 * ks[j] * z + disp.phase(us[j])).cos();
            }
        }
    }
    Ok(data)
}

/// Detector frame: reference spectrum plus fringes plus noise, clipped at 0.
pub fn synthesize_spectrogram(
    phantom: &Phantom,
    source: &SourceSpec,
    noise: &NoiseSpec,
    grid: &WavenumberGrid,
    domain: Domain,
) -> Result<Spectrogram> {
    if !(noise.sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise sigma must be >= 0".into()));
    }
    let mut data = synthesize_fringes(phantom, source, grid, domain)?;
    let reference = reference_spectrum(source, grid, domain);
    for mut col in data.columns_mut() {
        col.iter_mut().zip(&reference).for_each(|(v, r)| *v += r);
    }
    if noise.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        data.mapv_inplace(|v| v + noise.sigma * rng.sample::<f64, _>(StandardNormal));
    }
    data.mapv_inplace(|v| v.max(0.0));
    Ok(Spectrogram::new(data, domain))
}

/// Seed of the noise realisation for one frame of a volume.
pub fn frame_seed(base: u64, index: u64) -> u64 {
    // splitmix64 step keeps neighbouring indices decorrelated
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Frames for a sequence of positions, `repeats` noise realisations each,
/// ordered position-major.
pub fn synthesize_volume(
    phantoms: &[Phantom],
    source: &SourceSpec,
    noise: &NoiseSpec,
    repeats: usize,
    grid: &WavenumberGrid,
    domain: Domain,
) -> Result<Vec<Spectrogram>> {
    use rayon::prelude::*;
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be >= 1".into()));
    }
    (0..phantoms.len() * repeats)
        .into_par_iter()
        .map(|i| {
            let frame_noise = NoiseSpec {
                sigma: noise.sigma,
                seed: frame_seed(noise.seed, i as u64),
            };
            synthesize_spectrogram(&phantoms[i / repeats], source, &frame_noise, grid, domain)
        })
        .collect()
}

/// Depth window (pixels) over which the ramp phantom's bands are laid out.
pub fn ramp_band_range(n_z: usize) -> (usize, usize) {
    (n_z / 16, 11 * n_z / 16)
}

/// Six-layer phantom whose accumulated dispersion grows linearly with depth
/// from `a2_lo` (shallowest layer) to `a2_hi` (deepest layer).
///
/// Layers sit at the centres of the first, second, fourth and fifth of five
/// equal windows over [`ramp_band_range`], and symmetrically around the
/// centre of the third, so equally spaced coefficients serve each window.
/// The layers carry a 2 px tilt across the frame.
pub fn ramp_phantom(grid: &WavenumberGrid, a2_lo: f64, a2_hi: f64, n_alines: usize) -> Phantom {
    let (lo, hi) = ramp_band_range(grid.n_z());
    let w = (hi - lo) as f64 / 5.0;
    let centre = |i: usize| lo as f64 + w * (i as f64 + 0.5);
    let depths_px = [
        centre(0),
        centre(1),
        centre(2) - w / 4.0,
        centre(2) + w / 4.0,
        centre(3),
        centre(4),
    ];
    let reflectivity = [0.30, 0.15, 0.22, 0.18, 0.12, 0.25];
    let pix = grid.axial_pixel_um();
    let (z0, z4) = (centre(0), centre(4));
    let layers = depths_px
        .iter()
        .zip(reflectivity)
        .map(|(&z, r)| {
            let a2 = a2_lo + (a2_hi - a2_lo) * (z - z0) / (z4 - z0);
            PhantomLayer::new(z.round() * pix, r, a2)
        })
        .collect();
    let mut p = Phantom::new(layers, n_alines);
    p.lateral.tilt_px = RAMP_TILT_PX;
    p
}

pub const RAMP_TILT_PX: f64 = 2.0;

/// Random per-position variation of a base phantom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Variation {
    pub tilt_px_max: f64,
    pub curvature_px: f64,
    pub depth_jitter_px: f64,
    /// Relative reflectivity jitter (uniform, multiplicative).
    pub reflectivity_jitter: f64,
    pub modulation_amplitude: f64,
}

impl Default for Variation {
    fn default() -> Self {
        Self {
            tilt_px_max: 2.0,
            curvature_px: 0.0,
            depth_jitter_px: 1.0,
            reflectivity_jitter: 0.2,
            modulation_amplitude: 0.3,
        }
    }
}

impl Variation {
    pub fn none() -> Self {
        Self {
            tilt_px_max: 0.0,
            curvature_px: 0.0,
            depth_jitter_px: 0.0,
            reflectivity_jitter: 0.0,
            modulation_amplitude: 0.0,
        }
    }

    /// Phantom for sequence position `position`; deterministic in `seed`.
    pub fn member(&self, base: &Phantom, position: usize, seed: u64, pix_um: f64) -> Phantom {
        let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seed ^ 0x5EED_F00D, position as u64));
        let mut p = base.clone();
        let sym = |rng: &mut ChaCha8Rng, m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        p.lateral.tilt_px = base.lateral.tilt_px + sym(&mut rng, self.tilt_px_max);
        p.lateral.curvature_px = base.lateral.curvature_px + self.curvature_px;
        let shift = sym(&mut rng, self.depth_jitter_px) * pix_um;
        for l in &mut p.layers {
            l.depth_um += shift;
            l.reflectivity =
                (l.reflectivity * (1.0 + sym(&mut rng, self.reflectivity_jitter))).clamp(1e-6, 1.0);
        }
        if self.modulation_amplitude > 0.0 {
            p.lateral.modulation = Modulation::SmoothRandom {
                amplitude: self.modulation_amplitude,
                seed: rng.random(),
            };
        }
        p
    }
}
