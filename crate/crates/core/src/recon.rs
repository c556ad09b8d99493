//! Spectral-domain reconstruction: background subtraction, k-linearisation,
//! analytic-signal promotion, dispersion phase correction, FFT and imaging.

use std::sync::Arc;

use ndarray::Array2;
use rayon::prelude::*;
pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionCoefficients, DispersionProfile};
use crate::error::{Error, Result};
use crate::frame::{BScan, Domain, Scale, Spectrogram};
use crate::grid::WavenumberGrid;
use crate::interp::{Interpolation, Resampler};

/// Spectral apodisation applied before the depth transform.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    Hann,
    /// Gaussian in the normalised coordinate `u`, standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

impl Window {
    pub fn weight(&self, u: f64) -> f64 {
        match *self {
            Window::None => 1.0,
            Window::Hann => {
                let c = (std::f64::consts::FRAC_PI_2 * u).cos();
                c * c
            }
            Window::Gaussian { sigma } => (-0.5 * (u / sigma).powi(2)).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    /// Mean over A-lines of each spectral sample.
    #[default]
    PerColumnMean,
    /// A measured reference-arm spectrum, one value per spectral sample.
    Reference(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionConfig {
    pub window: Window,
    pub background: Background,
    pub log_floor_db: f64,
    pub interpolation: Interpolation,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            window: Window::None,
            background: Background::PerColumnMean,
            log_floor_db: -50.0,
            interpolation: Interpolation::Cubic,
        }
    }
}

impl ReconstructionConfig {
    pub fn with_reference(reference: Vec<f64>) -> Self {
        Self {
            background: Background::Reference(reference),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.log_floor_db < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log_floor_db must be negative, got {}",
                self.log_floor_db
            )));
        }
        if let Window::Gaussian { sigma } = self.window {
            if !(sigma > 0.0) {
                return Err(Error::InvalidParameter("gaussian window sigma must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Complex spectrum on the uniform wavenumber axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum(pub Vec<Complex64>);

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn subtract_background(frame: &Spectrogram, cfg: &ReconstructionConfig) -> Result<Spectrogram> {
    if frame.n_alines() == 0 {
        return Err(Error::Empty("spectrogram has no A-lines"));
    }
    let mut data = frame.data.clone();
    match &cfg.background {
        Background::PerColumnMean => {
            for mut row in data.rows_mut() {
                let mean = row.sum() / row.len() as f64;
                row.mapv_inplace(|v| v - mean);
            }
        }
        Background::Reference(reference) => {
            if reference.len() != frame.n_k() {
                return Err(Error::dims(
                    format!("reference of {} samples", frame.n_k()),
                    format!("{}", reference.len()),
                ));
            }
            for mut col in data.columns_mut() {
                col.iter_mut().zip(reference).for_each(|(v, r)| *v -= r);
            }
        }
    }
    Ok(Spectrogram {
        data,
        domain: frame.domain,
        background_removed: true,
    })
}

/// Resample every A-line from detector wavenumbers `2π/λ` onto the uniform axis.
pub fn linearize_k(
    frame: &Spectrogram,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<Spectrogram> {
    frame.check_grid(grid)?;
    if frame.domain != Domain::Wavelength {
        return Err(Error::InvalidParameter(
            "spectrogram is already k-linearized".into(),
        ));
    }
    crate::grid::check_increasing(grid.lambda_samples())?;
    let mut k_src = grid.k_detector();
    k_src.reverse();
    let resampler = Resampler::new(&k_src, grid.k_uniform(), cfg.interpolation)?;
    let n_k = grid.n_k();
    let columns: Vec<Vec<f64>> = (0..frame.n_alines())
        .into_par_iter()
        .map(|c| {
            let mut y = frame.data.column(c).to_vec();
            y.reverse();
            let mut out = vec![0.0; n_k];
            resampler.apply(&y, &mut out);
            out
        })
        .collect();
    Ok(Spectrogram {
        data: columns_to_array(n_k, &columns),
        domain: Domain::KLinear,
        background_removed: frame.background_removed,
    })
}

/// Background subtraction followed by k-linearisation, skipping whatever
/// the frame's tags say has already been done.
pub fn preprocess(
    frame: &Spectrogram,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<Spectrogram> {
    frame.check_grid(grid)?;
    let bg;
    let frame = if frame.background_removed {
        frame
    } else {
        bg = subtract_background(frame, cfg)?;
        &bg
    };
    match frame.domain {
        Domain::Wavelength => linearize_k(frame, grid, cfg),
        Domain::KLinear => Ok(frame.clone()),
    }
}

/// Cached FFT plans and per-sample tables for one grid and configuration.
#[derive(Clone)]
pub struct AlineProcessor {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    u: Vec<f64>,
}

impl std::fmt::Debug for AlineProcessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AlineProcessor")
            .field("n_k", &self.u.len())
            .finish()
    }
}

impl AlineProcessor {
    pub fn new(grid: &WavenumberGrid, window: Window) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n_k();
        let u = grid.u_axis();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            window: u.iter().map(|&v| window.weight(v)).collect(),
            u,
        }
    }

    pub fn n_k(&self) -> usize {
        self.u.len()
    }

    /// One-sided (analytic) version of a real k-domain signal: negative depth
    /// frequencies are zeroed and positive ones doubled.
    pub fn analytic(&self, real: &[f64]) -> ComplexSpectrum {
        let n = self.n_k();
        assert_eq!(real.len(), n, "A-line length differs from grid");
        let mut buf: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let half = n / 2;
        for v in &mut buf[1..half] {
            *v *= 2.0;
        }
        for v in &mut buf[half + 1..] {
            *v = Complex64::new(0.0, 0.0);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        for v in &mut buf {
            *v *= scale;
        }
        ComplexSpectrum(buf)
    }

    /// Analytic signal multiplied by the spectral window.
    pub fn prepare(&self, real: &[f64]) -> ComplexSpectrum {
        let mut s = self.analytic(real);
        for (v, &w) in s.0.iter_mut().zip(&self.window) {
            *v *= w;
        }
        s
    }

    /// `exp(-i(a2·u² + a3·u³))` for every sample.
    pub fn correction_phasors(&self, coeffs: &DispersionCoefficients) -> Vec<Complex64> {
        self.u
            .iter()
            .map(|&u| Complex64::from_polar(1.0, -coeffs.phase(u)))
            .collect()
    }

    /// Magnitude of the positive-depth half of the corrected spectrum's FFT.
    pub fn depth_profile(&self, prepared: &ComplexSpectrum, phasors: Option<&[Complex64]>) -> Vec<f64> {
        let n = self.n_k();
        let mut buf = prepared.0.clone();
        if let Some(p) = phasors {
            buf.iter_mut().zip(p).for_each(|(v, &q)| *v *= q);
        }
        self.forward.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf[..n / 2].iter().map(|v| v.norm() * scale).collect()
    }
}

/// Multiply each sample by `exp(-i(a2·u² + a3·u³))`.
pub fn apply_phase_correction(
    spectrum: &ComplexSpectrum,
    coeffs: &DispersionCoefficients,
    grid: &WavenumberGrid,
) -> Result<ComplexSpectrum> {
    coeffs.validate(f64::INFINITY)?;
    if spectrum.len() != grid.n_k() {
        return Err(Error::dims(
            format!("{} spectral samples", grid.n_k()),
            format!("{}", spectrum.len()),
        ));
    }
    if coeffs.is_zero() {
        return Ok(spectrum.clone());
    }
    Ok(ComplexSpectrum(
        spectrum
            .0
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, -coeffs.phase(grid.u(j))))
            .collect(),
    ))
}

/// Phase correction of a real k-linearized A-line, promoted to its analytic
/// signal first.
pub fn apply_phase_correction_real(
    aline: &[f64],
    coeffs: &DispersionCoefficients,
    grid: &WavenumberGrid,
) -> Result<ComplexSpectrum> {
    coeffs.validate(f64::INFINITY)?;
    if aline.len() != grid.n_k() {
        return Err(Error::dims(
            format!("{} spectral samples", grid.n_k()),
            format!("{}", aline.len()),
        ));
    }
    let proc = AlineProcessor::new(grid, Window::None);
    apply_phase_correction(&proc.analytic(aline), coeffs, grid)
}

/// Depth profile (`n_z` magnitudes) of one k-linearized, background-free A-line.
pub fn reconstruct_ascan(
    aline: &[f64],
    coeffs: &DispersionCoefficients,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<Vec<f64>> {
    coeffs.validate(f64::INFINITY)?;
    if aline.len() != grid.n_k() {
        return Err(Error::dims(
            format!("{} spectral samples", grid.n_k()),
            format!("{}", aline.len()),
        ));
    }
    let proc = AlineProcessor::new(grid, cfg.window);
    let phasors = (!coeffs.is_zero()).then(|| proc.correction_phasors(coeffs));
    Ok(proc.depth_profile(&proc.prepare(aline), phasors.as_deref()))
}

/// A preprocessed frame held as windowed analytic spectra, ready to be imaged
/// with any number of coefficient candidates.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    processor: AlineProcessor,
    columns: Vec<ComplexSpectrum>,
    axial_pixel_um: f64,
}

impl PreparedFrame {
    pub fn new(frame: &Spectrogram, grid: &WavenumberGrid, cfg: &ReconstructionConfig) -> Result<Self> {
        cfg.validate()?;
        let ready = preprocess(frame, grid, cfg)?;
        let processor = AlineProcessor::new(grid, cfg.window);
        let columns = (0..ready.n_alines())
            .into_par_iter()
            .map(|c| processor.prepare(&ready.data.column(c).to_vec()))
            .collect();
        Ok(Self {
            processor,
            columns,
            axial_pixel_um: grid.axial_pixel_um(),
        })
    }

    pub fn n_alines(&self) -> usize {
        self.columns.len()
    }

    pub fn n_z(&self) -> usize {
        self.processor.n_k() / 2
    }

    pub fn image(&self, coeffs: &DispersionCoefficients) -> Result<BScan> {
        coeffs.validate(f64::INFINITY)?;
        let phasors = (!coeffs.is_zero()).then(|| self.processor.correction_phasors(coeffs));
        let columns: Vec<Vec<f64>> = self
            .columns
            .par_iter()
            .map(|c| self.processor.depth_profile(c, phasors.as_deref()))
            .collect();
        Ok(BScan::linear(
            columns_to_array(self.n_z(), &columns),
            self.axial_pixel_um,
        ))
    }
}

/// Whole-frame or depth-resolved compensation.
#[derive(Debug, Clone, Copy)]
pub enum Compensation<'a> {
    Global(DispersionCoefficients),
    Profile(&'a DispersionProfile),
}

impl From<DispersionCoefficients> for Compensation<'_> {
    fn from(c: DispersionCoefficients) -> Self {
        Compensation::Global(c)
    }
}

impl<'a> From<&'a DispersionProfile> for Compensation<'a> {
    fn from(p: &'a DispersionProfile) -> Self {
        Compensation::Profile(p)
    }
}

/// Full pipeline for one frame. Profiles are reconstructed once per band
/// coefficient and stitched with the default seam blend.
pub fn reconstruct_bscan<'a>(
    frame: &Spectrogram,
    compensation: impl Into<Compensation<'a>>,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<BScan> {
    match compensation.into() {
        Compensation::Global(c) => PreparedFrame::new(frame, grid, cfg)?.image(&c),
        Compensation::Profile(p) => crate::stitch::reconstruct_profile(frame, p, grid, cfg),
    }
}

pub fn average_frames(frames: &[BScan]) -> Result<BScan> {
    let first = frames.first().ok_or(Error::Empty("no frames to average"))?;
    if let Some(b) = frames.iter().find(|b| b.scale != first.scale) {
        return Err(Error::Scale(format!(
            "mixed scales {:?} and {:?}",
            first.scale, b.scale
        )));
    }
    if first.scale != Scale::Linear {
        return Err(Error::Scale("frames must be linear scale to average".into()));
    }
    let mut acc = Array2::<f64>::zeros(first.dim());
    for b in frames {
        if b.dim() != first.dim() {
            return Err(Error::dims(format!("{:?}", first.dim()), format!("{:?}", b.dim())));
        }
        acc += &b.pixels;
    }
    acc /= frames.len() as f64;
    Ok(BScan::linear(acc, first.axial_pixel_um))
}

/// `20·log10(p / max)` clamped below at `floor_db`.
pub fn log_display(b: &BScan, floor_db: f64) -> Result<BScan> {
    if b.scale != Scale::Linear {
        return Err(Error::Scale("log display needs a linear image".into()));
    }
    if !(floor_db < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "floor must be negative, got {floor_db}"
        )));
    }
    let max = b.max();
    if !(max > 0.0) {
        return Err(Error::ZeroImage);
    }
    let pixels = b
        .pixels
        .mapv(|p| (20.0 * (p / max).log10()).max(floor_db));
    Ok(BScan {
        pixels,
        scale: Scale::LogDb,
        axial_pixel_um: b.axial_pixel_um,
    })
}

pub(crate) fn columns_to_array(rows: usize, columns: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((rows, columns.len()), |(r, c)| columns[c][r])
}
