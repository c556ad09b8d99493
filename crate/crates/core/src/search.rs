//! Automated estimation of second-order dispersion coefficients: a coarse
//! grid over `a2` followed by golden-section refinement of the best cell,
//! globally or per depth band.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{band_edges, DispersionCoefficients, DispersionProfile};
use crate::error::{Error, Result};
use crate::frame::Spectrogram;
use crate::grid::WavenumberGrid;
use crate::recon::{PreparedFrame, ReconstructionConfig};
use crate::sharpness::{sharpness, Region, SharpnessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub a2_range: [f64; 2],
    pub grid_points: usize,
    pub golden_iterations: usize,
    pub tol: f64,
    pub sharpness: SharpnessConfig,
    /// Depth window `[start, end)` (pixels) split into equal bands; the
    /// outermost bands are extended to the ends of the axis.
    pub band_range: Option<[usize; 2]>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            a2_range: [-100.0, 100.0],
            grid_points: 41,
            golden_iterations: 30,
            tol: 1e-3,
            sharpness: SharpnessConfig::default(),
            band_range: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.a2_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "degenerate a2 range [{lo}, {hi}]"
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter("coarse grid needs >= 3 points".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        self.sharpness.validate()
    }

    pub fn coarse_candidates(&self) -> Vec<f64> {
        let [lo, hi] = self.a2_range;
        let n = self.grid_points;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub coeffs: DispersionCoefficients,
    pub score: f64,
    /// `(a2, score)` of every coarse-grid candidate.
    pub coarse: Vec<(f64, f64)>,
    pub evaluations: usize,
}

fn better(a: (f64, f64), b: (f64, f64)) -> bool {
    // higher score, then smaller |a2|, then smaller a2
    a.1 > b.1 || (a.1 == b.1 && (a.0.abs() < b.0.abs() || (a.0.abs() == b.0.abs() && a.0 < b.0)))
}

/// Search over an already prepared frame, scoring only `region`.
pub fn search_prepared(
    frame: &PreparedFrame,
    region: Region,
    scfg: &SearchConfig,
) -> Result<SearchOutcome> {
    scfg.validate()?;
    let score = |a2: f64| -> Result<f64> {
        let image = frame.image(&DispersionCoefficients::second_order(a2))?;
        sharpness(&image, &scfg.sharpness, region)
    };

    let candidates = scfg.coarse_candidates();
    let coarse = candidates
        .par_iter()
        .map(|&a| score(a).map(|s| (a, s)))
        .collect::<Result<Vec<_>>>()?;
    let best_idx = (1..coarse.len()).fold(0, |b, i| if better(coarse[i], coarse[b]) { i } else { b });
    let mut best = coarse[best_idx];

    let mut lo = coarse[best_idx.saturating_sub(1)].0;
    let mut hi = coarse[(best_idx + 1).min(coarse.len() - 1)].0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = score(x1)?;
    let mut f2 = score(x2)?;
    let mut evaluations = coarse.len() + 2;
    for (x, f) in [(x1, f1), (x2, f2)] {
        if better((x, f), best) {
            best = (x, f);
        }
    }
    for _ in 0..scfg.golden_iterations {
        if hi - lo < scfg.tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = score(x1)?;
            if better((x1, f1), best) {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = score(x2)?;
            if better((x2, f2), best) {
                best = (x2, f2);
            }
        }
        evaluations += 1;
    }

    Ok(SearchOutcome {
        coeffs: DispersionCoefficients::second_order(best.0),
        score: best.1,
        coarse,
        evaluations,
    })
}

/// Single `a2` (with `a3 = 0`) maximising sharpness over the whole frame.
pub fn search_global_a2(
    frame: &Spectrogram,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
    scfg: &SearchConfig,
) -> Result<SearchOutcome> {
    scfg.validate()?;
    let prepared = PreparedFrame::new(frame, grid, cfg)?;
    search_prepared(&prepared, Region::Full, scfg)
}

/// Per-band search: the depth axis is split into `n_bands` equal windows and
/// each window gets the coefficient that makes it sharpest.
pub fn search_depth_bands(
    frame: &Spectrogram,
    n_bands: usize,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
    scfg: &SearchConfig,
) -> Result<DispersionProfile> {
    scfg.validate()?;
    let edges = band_edges(grid.n_z(), n_bands, scfg.band_range.map(|[a, b]| (a, b)))?;
    let prepared = PreparedFrame::new(frame, grid, cfg)?;
    let coeffs = edges
        .iter()
        .map(|&(start, end)| {
            search_prepared(&prepared, Region::Depth { start, end }, scfg).map(|o| o.coeffs)
        })
        .collect::<Result<Vec<_>>>()?;
    DispersionProfile::from_edges(&edges, &coeffs)
}
