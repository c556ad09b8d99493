//! Independent reference implementations used as test oracles. Written
//! directly from the defining formulas, deliberately without sharing code
//! with the library.
#![allow(dead_code)]

use ndarray::Array2;

pub fn oracle_mse(f: &Array2<f64>, g: &Array2<f64>) -> f64 {
    let mut acc = 0.0;
    for r in 0..f.nrows() {
        for c in 0..f.ncols() {
            let d = f[[r, c]] - g[[r, c]];
            acc += d * d;
        }
    }
    acc / (f.nrows() * f.ncols()) as f64
}

pub fn oracle_psnr(f: &Array2<f64>, g: &Array2<f64>) -> f64 {
    let s = g.iter().cloned().fold(f64::MIN, f64::max);
    10.0 * (s * s / oracle_mse(f, g)).log10()
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<Vec<f64>> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut w = vec![vec![0.0; size]; size];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let r2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            *v = (-r2 / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    for row in &mut w {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    w
}

fn halve(x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows() / 2, x.ncols() / 2));
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            out[[r, c]] = 0.25
                * (x[[2 * r, 2 * c]] + x[[2 * r + 1, 2 * c]] + x[[2 * r, 2 * c + 1]] + x[[2 * r + 1, 2 * c + 1]]);
        }
    }
    out
}

/// Per-scale (l, c, s) means, brute-force windowed sums at every valid
/// position with an 11x11 Gaussian window of sigma 1.5.
pub fn oracle_ssim_terms(x: &Array2<f64>, y: &Array2<f64>, l: f64) -> (f64, f64, f64) {
    let w = gaussian_window(11, 1.5);
    let c1 = (0.01 * l) * (0.01 * l);
    let c2 = (0.03 * l) * (0.03 * l);
    let c3 = c2 / 2.0;
    let (mut ls, mut cs, mut ss, mut n) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..=x.nrows() - 11 {
        for c in 0..=x.ncols() - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    mx += w[i][j] * x[[r + i, c + j]];
                    my += w[i][j] * y[[r + i, c + j]];
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let dx = x[[r + i, c + j]] - mx;
                    let dy = y[[r + i, c + j]] - my;
                    vx += w[i][j] * dx * dx;
                    vy += w[i][j] * dy * dy;
                    cov += w[i][j] * dx * dy;
                }
            }
            let (sx, sy) = (vx.sqrt(), vy.sqrt());
            ls += (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
            cs += (2.0 * sx * sy + c2) / (vx + vy + c2);
            ss += (cov + c3) / (sx * sy + c3);
            n += 1.0;
        }
    }
    (ls / n, cs / n, ss / n)
}

/// Five-scale MS-SSIM with the standard weights and L = joint maximum.
pub fn oracle_ms_ssim(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let weights = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
    let l = x.iter().chain(y.iter()).cloned().fold(f64::MIN, f64::max);
    let (mut x, mut y) = (x.clone(), y.clone());
    let mut result = 1.0;
    for (j, w) in weights.iter().enumerate() {
        let (lm, c, s) = oracle_ssim_terms(&x, &y, l);
        result *= c.powf(*w) * s.max(0.0).powf(*w);
        if j == weights.len() - 1 {
            result *= lm.powf(*w);
        }
        x = halve(&x);
        y = halve(&y);
    }
    result
}

/// Width at half of the largest sample, linear interpolation between samples.
pub fn oracle_fwhm(p: &[f64]) -> f64 {
    oracle_fwhm_at(p, argmax_in(p, 0, p.len()))
}

/// Width at half height of the local maximum within 3 samples of `near`.
pub fn oracle_fwhm_near(p: &[f64], near: usize) -> f64 {
    oracle_fwhm_at(p, argmax_in(p, near - 3, near + 4))
}

fn oracle_fwhm_at(p: &[f64], imax: usize) -> f64 {
    let m = p[imax];
    let half = m / 2.0;
    let mut a = imax;
    while p[a - 1] >= half {
        a -= 1;
    }
    let left = (a - 1) as f64 + (half - p[a - 1]) / (p[a] - p[a - 1]);
    let mut b = imax;
    while p[b + 1] >= half {
        b += 1;
    }
    let right = b as f64 + (p[b] - half) / (p[b] - p[b + 1]);
    right - left
}

/// Index of the largest sample inside `[lo, hi)`.
pub fn argmax_in(p: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap()
}
