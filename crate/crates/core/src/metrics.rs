//! Full-reference image quality: MSE, PSNR and multi-scale SSIM.

use ndarray::{s, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STANDARD_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

fn check_dims(f: &ArrayView2<f64>, g: &ArrayView2<f64>) -> Result<()> {
    if f.dim() != g.dim() {
        return Err(Error::dims(format!("{:?}", f.dim()), format!("{:?}", g.dim())));
    }
    if f.is_empty() {
        return Err(Error::Empty("image has no pixels"));
    }
    Ok(())
}

pub fn mse(f: &ArrayView2<f64>, g: &ArrayView2<f64>) -> Result<f64> {
    check_dims(f, g)?;
    let sum = Zip::from(f).and(g).fold(0.0, |acc, a, b| acc + (a - b) * (a - b));
    Ok(sum / f.len() as f64)
}

/// Peak value used in the PSNR numerator.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsnrPeak {
    /// Maximum of the reconstructed (second) image.
    #[default]
    MaxOfReconstructed,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Identical => None,
        }
    }
}

/// PSNR of `g` against ground truth `f`, peak taken from `g`.
pub fn psnr(f: &ArrayView2<f64>, g: &ArrayView2<f64>) -> Result<Psnr> {
    psnr_with(f, g, PsnrPeak::MaxOfReconstructed)
}

pub fn psnr_with(f: &ArrayView2<f64>, g: &ArrayView2<f64>, peak: PsnrPeak) -> Result<Psnr> {
    let e = mse(f, g)?;
    let s = match peak {
        PsnrPeak::MaxOfReconstructed => g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        PsnrPeak::Fixed(v) => {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("PSNR peak must be positive, got {v}")));
            }
            v
        }
    };
    if e == 0.0 {
        return Ok(Psnr::Identical);
    }
    if s <= 0.0 {
        return Err(Error::ZeroImage);
    }
    Ok(Psnr::Db(10.0 * (s * s / e).log10()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicRange {
    /// Largest pixel over both images (1 if both are zero).
    JointMax,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsSsimConfig {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: DynamicRange,
    /// One exponent per scale; the scale count is the length.
    pub weights: Vec<f64>,
    pub window_size: usize,
    pub window_sigma: f64,
}

impl Default for MsSsimConfig {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: DynamicRange::JointMax,
            weights: STANDARD_WEIGHTS.to_vec(),
            window_size: 11,
            window_sigma: 1.5,
        }
    }
}

impl MsSsimConfig {
    pub fn uniform(scales: usize) -> Self {
        Self {
            weights: vec![1.0 / scales as f64; scales],
            ..Self::default()
        }
    }

    pub fn with_scales(mut self, scales: usize) -> Self {
        self.weights = STANDARD_WEIGHTS[..scales.min(5)].to_vec();
        self
    }

    pub fn scales(&self) -> usize {
        self.weights.len()
    }

    pub fn min_side(&self) -> usize {
        (1usize << self.scales().saturating_sub(1)) * self.window_size
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidParameter("K1 and K2 must be positive".into()));
        }
        if let DynamicRange::Fixed(l) = self.dynamic_range {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("dynamic range must be positive, got {l}")));
            }
        }
        if self.weights.is_empty() || self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "need at least one scale with non-negative weights".into(),
            ));
        }
        if self.window_size == 0 || !(self.window_sigma > 0.0) {
            return Err(Error::InvalidParameter("window must be non-empty with positive sigma".into()));
        }
        Ok(())
    }

    /// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn window_taps(&self) -> Vec<f64> {
        let c = (self.window_size - 1) as f64 / 2.0;
        let taps: Vec<f64> = (0..self.window_size)
            .map(|i| {
                let d = i as f64 - c;
                (-d * d / (2.0 * self.window_sigma * self.window_sigma)).exp()
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / sum).collect()
    }

    fn constants(&self, l: f64) -> (f64, f64, f64) {
        let c1 = (self.k1 * l).powi(2);
        let c2 = (self.k2 * l).powi(2);
        (c1, c2, c2 / 2.0)
    }
}

/// Windowed statistics at one image position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalStats {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov_xy: f64,
}

/// Luminance, contrast and structure terms for one window; `(c1, c2, c3)`
/// are the stabilizing constants.
pub fn ssim_components(st: &LocalStats, c: (f64, f64, f64)) -> (f64, f64, f64) {
    let (c1, c2, c3) = c;
    let vx = st.var_x.max(0.0);
    let vy = st.var_y.max(0.0);
    let sxy = (vx * vy).sqrt();
    let l = (2.0 * st.mean_x * st.mean_y + c1) / (st.mean_x * st.mean_x + st.mean_y * st.mean_y + c1);
    let cs = (2.0 * sxy + c2) / (vx + vy + c2);
    let st_term = (st.cov_xy.clamp(-sxy, sxy) + c3) / (sxy + c3);
    (l, cs, st_term)
}

/// Mean component values over all valid window positions at one scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleComponents {
    pub scale: usize,
    pub luminance: f64,
    pub contrast: f64,
    pub structure: f64,
}

fn filter_valid(img: &Array2<f64>, taps: &[f64]) -> Array2<f64> {
    let n = taps.len();
    let (rows, cols) = img.dim();
    let (or, oc) = (rows + 1 - n, cols + 1 - n);
    let mut horiz = Array2::<f64>::zeros((rows, oc));
    for r in 0..rows {
        let row = img.row(r);
        for c in 0..oc {
            horiz[[r, c]] = taps.iter().enumerate().map(|(t, w)| w * row[c + t]).sum();
        }
    }
    let mut out = Array2::<f64>::zeros((or, oc));
    for r in 0..or {
        for c in 0..oc {
            out[[r, c]] = taps.iter().enumerate().map(|(t, w)| w * horiz[[r + t, c]]).sum();
        }
    }
    out
}

/// Windowed statistics at every valid position of the window.
pub fn local_stats(x: &Array2<f64>, y: &Array2<f64>, cfg: &MsSsimConfig) -> Vec<LocalStats> {
    let taps = cfg.window_taps();
    let mx = filter_valid(x, &taps);
    let my = filter_valid(y, &taps);
    let mxx = filter_valid(&(x * x), &taps);
    let myy = filter_valid(&(y * y), &taps);
    let mxy = filter_valid(&(x * y), &taps);
    let mut out = Vec::with_capacity(mx.len());
    for (i, &mean_x) in mx.iter().enumerate() {
        let (r, c) = (i / mx.ncols(), i % mx.ncols());
        let mean_y = my[[r, c]];
        out.push(LocalStats {
            mean_x,
            mean_y,
            var_x: mxx[[r, c]] - mean_x * mean_x,
            var_y: myy[[r, c]] - mean_y * mean_y,
            cov_xy: mxy[[r, c]] - mean_x * mean_y,
        });
    }
    out
}

/// 2x2 block mean followed by decimation; odd trailing rows/columns drop.
pub fn downsample(img: &ArrayView2<f64>) -> Array2<f64> {
    let (rows, cols) = (img.nrows() / 2, img.ncols() / 2);
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let b = img.slice(s![2 * r..2 * r + 2, 2 * c..2 * c + 2]);
        (b[[0, 0]] + b[[0, 1]] + b[[1, 0]] + b[[1, 1]]) / 4.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsSsim {
    pub value: f64,
    pub scales: Vec<ScaleComponents>,
}

pub fn ms_ssim(x: &ArrayView2<f64>, y: &ArrayView2<f64>, cfg: &MsSsimConfig) -> Result<f64> {
    Ok(ms_ssim_detailed(x, y, cfg)?.value)
}

pub fn ms_ssim_detailed(x: &ArrayView2<f64>, y: &ArrayView2<f64>, cfg: &MsSsimConfig) -> Result<MsSsim> {
    cfg.validate()?;
    check_dims(x, y)?;
    let (rows, cols) = x.dim();
    let min_side = cfg.min_side();
    if rows.min(cols) < min_side {
        let mut suggested = 0;
        while rows.min(cols) >= (1usize << suggested) * cfg.window_size {
            suggested += 1;
        }
        return Err(Error::ImageTooSmall {
            rows,
            cols,
            scales: cfg.scales(),
            min_side,
            suggested,
        });
    }
    let l = match cfg.dynamic_range {
        DynamicRange::Fixed(l) => l,
        DynamicRange::JointMax => {
            let m = x.iter().chain(y.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
            if m > 0.0 {
                m
            } else {
                1.0
            }
        }
    };
    let constants = cfg.constants(l);
    let m = cfg.scales();
    let mut xs = x.to_owned();
    let mut ys = y.to_owned();
    let mut scales = Vec::with_capacity(m);
    let mut value = 1.0;
    for j in 0..m {
        let stats = local_stats(&xs, &ys, cfg);
        let n = stats.len() as f64;
        let (mut sl, mut sc, mut ss) = (0.0, 0.0, 0.0);
        for st in &stats {
            let (a, b, c) = ssim_components(st, constants);
            sl += a;
            sc += b;
            ss += c;
        }
        let comp = ScaleComponents {
            scale: j + 1,
            luminance: sl / n,
            contrast: sc / n,
            structure: ss / n,
        };
        let w = cfg.weights[j];
        value *= comp.contrast.powf(w) * comp.structure.max(0.0).powf(w);
        if j + 1 == m {
            value *= comp.luminance.max(0.0).powf(w);
        } else {
            xs = downsample(&xs.view());
            ys = downsample(&ys.view());
        }
        scales.push(comp);
    }
    Ok(MsSsim { value, scales })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub frame_id: Option<String>,
    /// `None` when the images are identical.
    pub psnr_db: Option<f64>,
    pub identical: bool,
    pub ms_ssim: f64,
    pub scales: Vec<ScaleComponents>,
}

impl MetricReport {
    pub fn evaluate(
        ground_truth: &ArrayView2<f64>,
        test: &ArrayView2<f64>,
        peak: PsnrPeak,
        cfg: &MsSsimConfig,
        frame_id: Option<String>,
    ) -> Result<Self> {
        let p = psnr_with(ground_truth, test, peak)?;
        let ms = ms_ssim_detailed(ground_truth, test, cfg)?;
        Ok(Self {
            frame_id,
            psnr_db: p.db(),
            identical: p == Psnr::Identical,
            ms_ssim: ms.value,
            scales: ms.scales,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn hand_example() {
        let f = array![[100.0, 100.0], [100.0, 100.0]];
        let g = array![[90.0, 110.0], [100.0, 100.0]];
        assert_eq!(mse(&f.view(), &g.view()).unwrap(), 50.0);
        let p = psnr(&f.view(), &g.view()).unwrap().db().unwrap();
        assert!((p - 10.0 * 242f64.log10()).abs() < 1e-12);
        assert_eq!(format!("{p:.4}"), "23.8382");
        assert_eq!(psnr(&f.view(), &f.view()).unwrap(), Psnr::Identical);
        let z = Array2::<f64>::zeros((2, 2));
        assert!(matches!(psnr(&f.view(), &z.view()), Err(Error::ZeroImage)));
    }

    #[test]
    fn components_closed_form() {
        let (c1, c2, c3) = (1e-4, 9e-4, 4.5e-4);
        let flat = LocalStats { mean_x: 0.5, mean_y: 0.7, var_x: 0.0, var_y: 0.0, cov_xy: 0.0 };
        let (l, c, s) = ssim_components(&flat, (c1, c2, c3));
        assert!((l - (2.0 * 0.35 + c1) / (0.25 + 0.49 + c1)).abs() < 1e-15 && l < 1.0);
        assert_eq!((c, s), (1.0, 1.0));
        let anti = LocalStats { mean_x: 0.5, mean_y: 0.5, var_x: 0.04, var_y: 0.04, cov_xy: -0.04 };
        assert!(ssim_components(&anti, (c1, c2, c3)).2 < 0.0);
    }

    #[test]
    fn too_small_suggests_scales() {
        let a = Array2::<f64>::ones((100, 200));
        match ms_ssim(&a.view(), &a.view(), &MsSsimConfig::default()) {
            Err(Error::ImageTooSmall { suggested, min_side, .. }) => {
                assert_eq!(min_side, 176);
                assert_eq!(suggested, 4);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn downsample_keeps_mean() {
        let a = Array2::from_shape_fn((6, 8), |(r, c)| (r * 8 + c) as f64 * 0.37);
        let d = downsample(&a.view());
        assert_eq!(d.dim(), (3, 4));
        assert!((d.mean().unwrap() - a.mean().unwrap()).abs() < 1e-12);
    }
}
