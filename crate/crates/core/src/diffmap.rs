//! Pixel-wise difference maps in a jet colour map, and PNG export.

use std::path::Path;

use image::{GrayImage, ImageFormat, Luma, Rgb, RgbImage};
use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::frame::BScan;

/// `|f - g|` scaled so the largest difference is 1; all zeros when f = g.
pub fn diff_magnitude(f: &ArrayView2<f64>, g: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if f.dim() != g.dim() {
        return Err(Error::dims(format!("{:?}", f.dim()), format!("{:?}", g.dim())));
    }
    let mut d = Array2::zeros(f.dim());
    Zip::from(&mut d).and(f).and(g).for_each(|d, a, b| *d = (a - b).abs());
    let max = d.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        d.mapv_inplace(|v| v / max);
    }
    Ok(d)
}

/// Piecewise-linear jet colour for `t` in [0, 1], components in [0, 1].
pub fn jet(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    let ch = |offset: f64| (1.5 - (4.0 * t - offset).abs()).clamp(0.0, 1.0);
    [ch(3.0), ch(2.0), ch(1.0)]
}

/// 256-entry 8-bit jet lookup table.
pub fn jet_table() -> Vec<[u8; 3]> {
    (0..256)
        .map(|i| jet(i as f64 / 255.0).map(|c| (c * 255.0).round() as u8))
        .collect()
}

pub fn colorize(normalized: &ArrayView2<f64>) -> RgbImage {
    let lut = jet_table();
    let (rows, cols) = normalized.dim();
    RgbImage::from_fn(cols as u32, rows as u32, |x, y| {
        let t = normalized[[y as usize, x as usize]].clamp(0.0, 1.0);
        Rgb(lut[(t * 255.0).round() as usize])
    })
}

pub fn diff_map(f: &ArrayView2<f64>, g: &ArrayView2<f64>) -> Result<RgbImage> {
    Ok(colorize(&diff_magnitude(f, g)?.view()))
}

/// Grayscale rendering with the image's own min..max mapped to 0..255.
pub fn to_gray(b: &BScan) -> GrayImage {
    let (lo, hi) = b
        .pixels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    GrayImage::from_fn(b.n_alines() as u32, b.n_z() as u32, |x, y| {
        let v = (b.pixels[[y as usize, x as usize]] - lo) / span;
        Luma([(v * 255.0).round() as u8])
    })
}

pub fn write_png<P, C>(img: &image::ImageBuffer<P, C>, path: &Path) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    img.save_with_format(path, ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Png(other.to_string()),
    })
}
