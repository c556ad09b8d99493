//! Axial intensity profiles with peak location and width estimates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{BScan, Scale};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub n_cols: usize,
    pub n_frames: usize,
    /// Minimum peak prominence as a fraction of the profile maximum.
    pub prominence: f64,
    /// Optional names for detected peaks, assigned shallowest first.
    pub labels: Vec<String>,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            n_cols: 5,
            n_frames: 6,
            prominence: 0.1,
            labels: Vec::new(),
        }
    }
}

impl ProfileConfig {
    pub fn raw() -> Self {
        Self {
            n_cols: 1,
            n_frames: 1,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Sub-pixel depth of the maximum.
    pub location_px: f64,
    pub height: f64,
    /// `None` if the profile never drops to half height on one side.
    pub fwhm_px: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub column: usize,
    pub n_cols: usize,
    pub n_frames: usize,
    pub axial_pixel_um: f64,
    pub profile: Vec<f64>,
    pub peaks: Vec<Peak>,
}

impl ProfileReport {
    pub fn nearest_peak(&self, location_px: f64) -> Option<&Peak> {
        self.peaks.iter().min_by(|a, b| {
            (a.location_px - location_px)
                .abs()
                .total_cmp(&(b.location_px - location_px).abs())
        })
    }

    pub fn profile_csv(&self) -> String {
        let mut out = String::from("depth_px,depth_um,intensity\n");
        for (i, v) in self.profile.iter().enumerate() {
            let _ = writeln!(out, "{i},{},{v}", i as f64 * self.axial_pixel_um);
        }
        out
    }

    pub fn peaks_csv(&self) -> String {
        let mut out = String::from("location_px,height,fwhm_px,label\n");
        for p in &self.peaks {
            let fwhm = p.fwhm_px.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{fwhm},{}",
                p.location_px,
                p.height,
                p.label.as_deref().unwrap_or("")
            );
        }
        out
    }
}

/// Average `n_frames` frames and `n_cols` columns centred on `column`,
/// then detect peaks in the resulting linear-scale depth profile.
pub fn axial_profile(frames: &[BScan], column: usize, cfg: &ProfileConfig) -> Result<ProfileReport> {
    if cfg.n_cols == 0 || cfg.n_frames == 0 {
        return Err(Error::InvalidParameter("n_cols and n_frames must be >= 1".into()));
    }
    if !(cfg.prominence >= 0.0) {
        return Err(Error::InvalidParameter("prominence must be non-negative".into()));
    }
    if frames.len() < cfg.n_frames {
        return Err(Error::InvalidParameter(format!(
            "{} frames requested, {} supplied",
            cfg.n_frames,
            frames.len()
        )));
    }
    let frames = &frames[..cfg.n_frames];
    let (n_z, n_a) = frames[0].dim();
    for f in frames {
        if f.dim() != (n_z, n_a) {
            return Err(Error::dims(format!("{:?}", (n_z, n_a)), format!("{:?}", f.dim())));
        }
        if f.scale != Scale::Linear {
            return Err(Error::Scale("profiles are taken on linear-scale frames".into()));
        }
    }
    if column >= n_a {
        return Err(Error::OutOfRange(format!("column {column} of {n_a}")));
    }
    let first = column
        .checked_sub(cfg.n_cols / 2)
        .filter(|f| f + cfg.n_cols <= n_a)
        .ok_or_else(|| {
            Error::OutOfRange(format!(
                "{} columns around column {column} exceed the {n_a}-column frame",
                cfg.n_cols
            ))
        })?;
    let norm = (cfg.n_frames * cfg.n_cols) as f64;
    let profile: Vec<f64> = (0..n_z)
        .map(|z| {
            frames
                .iter()
                .map(|f| (first..first + cfg.n_cols).map(|c| f.pixels[[z, c]]).sum::<f64>())
                .sum::<f64>()
                / norm
        })
        .collect();
    let mut peaks = find_peaks(&profile, cfg.prominence);
    for (p, label) in peaks.iter_mut().zip(&cfg.labels) {
        p.label = Some(label.clone());
    }
    Ok(ProfileReport {
        column,
        n_cols: cfg.n_cols,
        n_frames: cfg.n_frames,
        axial_pixel_um: frames[0].axial_pixel_um,
        profile,
        peaks,
    })
}

fn prominence(p: &[f64], i: usize) -> f64 {
    let side_min = |it: &mut dyn Iterator<Item = usize>| {
        let mut m = p[i];
        for j in it {
            if p[j] > p[i] {
                break;
            }
            m = m.min(p[j]);
        }
        m
    };
    let left = side_min(&mut (0..i).rev());
    let right = side_min(&mut (i + 1..p.len()));
    p[i] - left.max(right)
}

/// Three-point fit around a sampled maximum: Gaussian (log-parabola) when
/// all samples are positive, otherwise a plain parabola.
pub fn refine_peak(a: f64, b: f64, c: f64) -> (f64, f64) {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
        let den = la - 2.0 * lb + lc;
        if den < 0.0 {
            let d = 0.5 * (la - lc) / den;
            return (d, (lb - 0.25 * (la - lc) * d).exp());
        }
    }
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        let d = 0.5 * (a - c) / den;
        (d, b - 0.25 * (a - c) * d)
    } else {
        (0.0, b)
    }
}

/// Full width at half of `height` around sample `i`, by linear interpolation.
pub fn fwhm_at(p: &[f64], i: usize, height: f64) -> Option<f64> {
    let half = height / 2.0;
    let mut l = i;
    while p[l] >= half {
        if l == 0 {
            return None;
        }
        l -= 1;
    }
    let left = l as f64 + (half - p[l]) / (p[l + 1] - p[l]);
    let mut r = i;
    while p[r] >= half {
        r += 1;
        if r == p.len() {
            return None;
        }
    }
    let right = (r - 1) as f64 + (p[r - 1] - half) / (p[r - 1] - p[r]);
    Some(right - left)
}

pub fn find_peaks(p: &[f64], prominence_fraction: f64) -> Vec<Peak> {
    let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if p.len() < 3 || !(max > 0.0) {
        return Vec::new();
    }
    let floor = prominence_fraction * max;
    (1..p.len() - 1)
        .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1] && prominence(p, i) >= floor)
        .map(|i| {
            let (d, height) = refine_peak(p[i - 1], p[i], p[i + 1]);
            Peak {
                location_px: i as f64 + d,
                height,
                fwhm_px: fwhm_at(p, i, height),
                label: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn gaussian(n: usize, mu: f64, sigma: f64, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (-(i as f64 - mu).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect()
    }

    #[test]
    fn gaussian_fit_is_exact_at_peak() {
        let p = gaussian(64, 30.3, 2.0, 5.0);
        let peaks = find_peaks(&p, 0.1);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].location_px - 30.3).abs() < 1e-9);
        assert!((peaks[0].height - 5.0).abs() < 1e-9);
        let w = peaks[0].fwhm_px.unwrap();
        assert!((w / (2.3548 * 2.0) - 1.0).abs() < 0.02, "{w}");
    }

    #[test]
    fn small_bumps_are_not_peaks() {
        let mut p = gaussian(64, 20.0, 2.0, 1.0);
        for (i, v) in gaussian(64, 45.0, 1.5, 0.05).into_iter().enumerate() {
            p[i] += v;
        }
        assert_eq!(find_peaks(&p, 0.1).len(), 1);
        assert_eq!(find_peaks(&p, 0.01).len(), 2);
    }

    #[test]
    fn raw_profile_is_the_aline() {
        let px = Array2::from_shape_fn((16, 4), |(r, c)| (r * 4 + c) as f64);
        let b = BScan::linear(px.clone(), 1.5);
        let rep = axial_profile(&[b], 2, &ProfileConfig::raw()).unwrap();
        assert_eq!(rep.profile, px.column(2).to_vec());
    }

    #[test]
    fn averaging_window_must_fit() {
        let b = BScan::linear(Array2::ones((8, 10)), 1.5);
        let cfg = ProfileConfig { n_frames: 1, ..ProfileConfig::default() };
        assert!(axial_profile(std::slice::from_ref(&b), 1, &cfg).is_err());
        assert!(axial_profile(std::slice::from_ref(&b), 10, &ProfileConfig::raw()).is_err());
        assert!(axial_profile(std::slice::from_ref(&b), 2, &cfg).is_ok());
        assert!(axial_profile(&[b], 2, &ProfileConfig::default()).is_err());
    }
}
