//! Dispersion phase polynomial coefficients and depth-resolved profiles.
//!
//! Coefficients are expressed against the pixel-normalised wavenumber
//! coordinate `u = (k - k0) / (Δk / 2)`, so `a2` and `a3` are phases in
//! radians at the edge of the spectrometer band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;

/// Default magnitude bound for either coefficient, radians.
pub const DEFAULT_COEFF_BOUND: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionCoefficients {
    pub a2: f64,
    #[serde(default)]
    pub a3: f64,
}

impl DispersionCoefficients {
    pub const ZERO: Self = Self { a2: 0.0, a3: 0.0 };

    /// Validated constructor using [`DEFAULT_COEFF_BOUND`].
    pub fn new(a2: f64, a3: f64) -> Result<Self> {
        let c = Self { a2, a3 };
        c.validate(DEFAULT_COEFF_BOUND)?;
        Ok(c)
    }

    pub fn second_order(a2: f64) -> Self {
        Self { a2, a3: 0.0 }
    }

    pub fn validate(&self, bound: f64) -> Result<()> {
        if !(self.a2.is_finite() && self.a3.is_finite()) {
            return Err(Error::NonFiniteCoefficients {
                a2: self.a2,
                a3: self.a3,
            });
        }
        if self.a2.abs() > bound || self.a3.abs() > bound {
            return Err(Error::OutOfRange(format!(
                "coefficients ({}, {}) exceed bound {bound} rad",
                self.a2, self.a3
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.a2 == 0.0 && self.a3 == 0.0
    }

    /// Dispersive phase `a2·u² + a3·u³` at normalised coordinate `u`.
    pub fn phase(&self, u: f64) -> f64 {
        let u2 = u * u;
        self.a2 * u2 + self.a3 * u2 * u
    }

    /// From physical coefficients of `(k - k0)^2` (µm²) and `(k - k0)^3` (µm³).
    pub fn from_physical(a2_um2: f64, a3_um3: f64, grid: &WavenumberGrid) -> Self {
        let h = grid.half_span();
        Self {
            a2: a2_um2 * h * h,
            a3: a3_um3 * h * h * h,
        }
    }

    pub fn to_physical(&self, grid: &WavenumberGrid) -> (f64, f64) {
        let h = grid.half_span();
        (self.a2 / (h * h), self.a3 / (h * h * h))
    }

    /// Coefficients accumulated over an optical path `path_um` through a
    /// material with group-velocity dispersion `beta2` (µm) and third-order
    /// dispersion `beta3` (µm²), both per unit wavenumber expansion.
    pub fn from_material(beta2: f64, beta3: f64, path_um: f64, grid: &WavenumberGrid) -> Self {
        Self::from_physical(beta2 * path_um / 2.0, beta3 * path_um / 6.0, grid)
    }
}

impl std::ops::Add for DispersionCoefficients {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            a2: self.a2 + rhs.a2,
            a3: self.a3 + rhs.a3,
        }
    }
}

/// One depth band `[start, end)` in pixels and the coefficients serving it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthBand {
    pub start: usize,
    pub end: usize,
    pub a2: f64,
    #[serde(default)]
    pub a3: f64,
}

impl DepthBand {
    pub fn coeffs(&self) -> DispersionCoefficients {
        DispersionCoefficients {
            a2: self.a2,
            a3: self.a3,
        }
    }

    pub fn height(&self) -> usize {
        self.end - self.start
    }
}

/// Per-depth-band coefficients `C1..CN`, ordered shallow to deep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionProfile {
    pub bands: Vec<DepthBand>,
}

impl DispersionProfile {
    pub fn from_edges(edges: &[(usize, usize)], coeffs: &[DispersionCoefficients]) -> Result<Self> {
        if edges.len() != coeffs.len() {
            return Err(Error::dims(
                format!("{} coefficient sets", edges.len()),
                format!("{}", coeffs.len()),
            ));
        }
        Ok(Self {
            bands: edges
                .iter()
                .zip(coeffs)
                .map(|(&(start, end), c)| DepthBand {
                    start,
                    end,
                    a2: c.a2,
                    a3: c.a3,
                })
                .collect(),
        })
    }

    /// One band spanning the whole depth range.
    pub fn uniform(n_z: usize, coeffs: DispersionCoefficients) -> Self {
        Self {
            bands: vec![DepthBand {
                start: 0,
                end: n_z,
                a2: coeffs.a2,
                a3: coeffs.a3,
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn coefficients(&self) -> Vec<DispersionCoefficients> {
        self.bands.iter().map(DepthBand::coeffs).collect()
    }

    /// Bands must be non-empty, contiguous and cover `[0, n_z)`.
    pub fn validate(&self, n_z: usize) -> Result<()> {
        let first = self.bands.first().ok_or(Error::Empty("profile has no bands"))?;
        if first.start != 0 {
            return Err(Error::InvalidParameter(format!(
                "first band starts at {} instead of 0",
                first.start
            )));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if b.end <= b.start {
                return Err(Error::InvalidParameter(format!("band {i} is empty")));
            }
            b.coeffs().validate(f64::INFINITY)?;
            if let Some(next) = self.bands.get(i + 1) {
                if next.start != b.end {
                    return Err(Error::InvalidParameter(format!(
                        "bands {i} and {} are not contiguous",
                        i + 1
                    )));
                }
            }
        }
        let last = self.bands.last().unwrap();
        if last.end != n_z {
            return Err(Error::InvalidParameter(format!(
                "last band ends at {} instead of {n_z}",
                last.end
            )));
        }
        Ok(())
    }
}

/// Split `[0, n_z)` into `n_bands` windows of equal height over `range`
/// (default: the whole depth axis). The first and last windows are extended
/// to the ends of the axis so the result always covers every pixel.
pub fn band_edges(
    n_z: usize,
    n_bands: usize,
    range: Option<(usize, usize)>,
) -> Result<Vec<(usize, usize)>> {
    if n_bands == 0 {
        return Err(Error::InvalidParameter("n_bands must be >= 1".into()));
    }
    if n_bands > n_z {
        return Err(Error::OutOfRange(format!(
            "{n_bands} bands exceed {n_z} depth pixels"
        )));
    }
    let (lo, hi) = range.unwrap_or((0, n_z));
    if lo >= hi || hi > n_z || hi - lo < n_bands {
        return Err(Error::OutOfRange(format!(
            "band range [{lo}, {hi}) cannot hold {n_bands} bands within {n_z} pixels"
        )));
    }
    let span = (hi - lo) as f64;
    let mut cuts: Vec<usize> = (0..=n_bands)
        .map(|i| lo + (span * i as f64 / n_bands as f64).round() as usize)
        .collect();
    cuts[0] = 0;
    cuts[n_bands] = n_z;
    Ok(cuts.windows(2).map(|w| (w[0], w[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn physical_round_trip() {
        let g = GridSpec::default().build().unwrap();
        let c = DispersionCoefficients::new(40.0, -7.5).unwrap();
        let (p2, p3) = c.to_physical(&g);
        let back = DispersionCoefficients::from_physical(p2, p3, &g);
        assert!((back.a2 - 40.0).abs() < 1e-12);
        assert!((back.a3 + 7.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_out_of_bound() {
        assert!(matches!(
            DispersionCoefficients::new(f64::NAN, 0.0),
            Err(Error::NonFiniteCoefficients { .. })
        ));
        assert!(DispersionCoefficients::new(250.0, 0.0).is_err());
    }

    #[test]
    fn equal_edges_cover_axis() {
        let e = band_edges(256, 5, None).unwrap();
        assert_eq!(e.first().unwrap().0, 0);
        assert_eq!(e.last().unwrap().1, 256);
        for w in e.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        let e = band_edges(256, 5, Some((16, 176))).unwrap();
        assert_eq!(e, vec![(0, 48), (48, 80), (80, 112), (112, 144), (144, 256)]);
        assert!(band_edges(4, 5, None).is_err());
        assert!(band_edges(4, 0, None).is_err());
    }

    #[test]
    fn profile_validation() {
        let edges = band_edges(100, 4, None).unwrap();
        let coeffs = vec![DispersionCoefficients::second_order(1.0); 4];
        let p = DispersionProfile::from_edges(&edges, &coeffs).unwrap();
        p.validate(100).unwrap();
        assert!(p.validate(101).is_err());
        let mut gap = p.clone();
        gap.bands[1].start += 1;
        assert!(gap.validate(100).is_err());
    }

    #[test]
    fn profile_json_shape() {
        let p = DispersionProfile::uniform(8, DispersionCoefficients::second_order(3.0));
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert_eq!(v["bands"][0]["start"], 0);
        assert_eq!(v["bands"][0]["end"], 8);
        assert_eq!(v["bands"][0]["a2"], 3.0);
    }
}
