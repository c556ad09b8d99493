//! Ground-truth assembly: reconstruct a frame once per coefficient, take each
//! depth band from the channel that compensates it, and cross-fade the seams.

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionCoefficients, DispersionProfile};
use crate::error::{Error, Result};
use crate::frame::{BScan, Scale, Spectrogram};
use crate::grid::WavenumberGrid;
use crate::recon::{PreparedFrame, ReconstructionConfig};

pub const DEFAULT_BLEND_PX: usize = 8;

/// Partially compensated reconstructions of one frame, one per coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    channels: Vec<BScan>,
    coeffs: Vec<DispersionCoefficients>,
}

impl ChannelStack {
    pub fn new(channels: Vec<BScan>, coeffs: Vec<DispersionCoefficients>) -> Result<Self> {
        let first = channels.first().ok_or(Error::Empty("channel stack"))?;
        if channels.len() != coeffs.len() {
            return Err(Error::dims(
                format!("{} coefficient sets", channels.len()),
                format!("{}", coeffs.len()),
            ));
        }
        for c in &channels {
            if c.dim() != first.dim() {
                return Err(Error::dims(format!("{:?}", first.dim()), format!("{:?}", c.dim())));
            }
            if c.scale != Scale::Linear {
                return Err(Error::Scale("channels must be linear scale".into()));
            }
        }
        check_ordered(&coeffs)?;
        Ok(Self { channels, coeffs })
    }

    pub fn channels(&self) -> &[BScan] {
        &self.channels
    }

    pub fn coeffs(&self) -> &[DispersionCoefficients] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.channels[0].dim()
    }

    pub fn into_channels(self) -> Vec<BScan> {
        self.channels
    }

    /// Index of the channel whose `a2` is nearest `a2`; ties go to the lower index.
    pub fn nearest(&self, a2: f64) -> usize {
        (1..self.coeffs.len()).fold(0, |best, i| {
            if (self.coeffs[i].a2 - a2).abs() < (self.coeffs[best].a2 - a2).abs() {
                i
            } else {
                best
            }
        })
    }
}

fn check_ordered(coeffs: &[DispersionCoefficients]) -> Result<()> {
    for c in coeffs {
        c.validate(f64::INFINITY)?;
    }
    if coeffs.windows(2).any(|w| !(w[1].a2 > w[0].a2)) {
        return Err(Error::InvalidParameter(
            "channel coefficients must be strictly increasing in a2".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandAssignment {
    pub start: usize,
    pub end: usize,
    pub channel: usize,
}

/// Which channel serves each depth band, and the seam cross-fade width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandMap {
    pub bands: Vec<BandAssignment>,
    pub blend_px: usize,
}

impl BandMap {
    /// Assign each profile band the channel reconstructed with exactly its
    /// coefficients.
    pub fn matching(profile: &DispersionProfile, stack: &ChannelStack, blend_px: usize) -> Result<Self> {
        let bands = profile
            .bands
            .iter()
            .map(|b| {
                stack
                    .coeffs
                    .iter()
                    .position(|c| *c == b.coeffs())
                    .map(|channel| BandAssignment {
                        start: b.start,
                        end: b.end,
                        channel,
                    })
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "no channel reconstructed with a2={} a3={}",
                            b.a2, b.a3
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { bands, blend_px })
    }

    /// Assign each profile band the channel with the nearest `a2`.
    pub fn nearest(profile: &DispersionProfile, stack: &ChannelStack, blend_px: usize) -> Self {
        let bands = profile
            .bands
            .iter()
            .map(|b| BandAssignment {
                start: b.start,
                end: b.end,
                channel: stack.nearest(b.a2),
            })
            .collect();
        Self { bands, blend_px }
    }

    pub fn validate(&self, n_z: usize, n_channels: usize) -> Result<()> {
        let mut next = 0;
        for (i, b) in self.bands.iter().enumerate() {
            if b.start != next || b.end <= b.start {
                return Err(Error::InvalidParameter(format!(
                    "band {i} [{}, {}) leaves depth pixel {next} uncovered",
                    b.start, b.end
                )));
            }
            if b.channel >= n_channels {
                return Err(Error::OutOfRange(format!(
                    "band {i} references channel {} of {n_channels}",
                    b.channel
                )));
            }
            next = b.end;
        }
        if next != n_z {
            return Err(Error::InvalidParameter(format!(
                "depth pixels [{next}, {n_z}) are not covered by any band"
            )));
        }
        if self.bands.len() > 1 {
            let min_height = self.bands.iter().map(|b| b.end - b.start).min().unwrap();
            if self.blend_px >= min_height {
                return Err(Error::InvalidParameter(format!(
                    "blend of {} px is not narrower than the smallest band ({min_height} px)",
                    self.blend_px
                )));
            }
        }
        Ok(())
    }
}

/// Largest blend not exceeding [`DEFAULT_BLEND_PX`] that the profile admits.
pub fn default_blend(profile: &DispersionProfile) -> usize {
    let min_height = profile.bands.iter().map(|b| b.height()).min().unwrap_or(1);
    DEFAULT_BLEND_PX.min(min_height.saturating_sub(1))
}

/// `k` coefficients between `c_lo` and `c_hi`, equally spaced and inclusive
/// of both ends; a single channel uses `c_lo`.
pub fn select_channel_coeffs(
    c_lo: DispersionCoefficients,
    c_hi: DispersionCoefficients,
    k: usize,
) -> Result<Vec<DispersionCoefficients>> {
    match k {
        0 => Err(Error::InvalidParameter("channel count must be >= 1".into())),
        1 => Ok(vec![c_lo]),
        _ => {
            let span = (k - 1) as f64;
            Ok((0..k)
                .map(|i| {
                    let i = i as f64;
                    DispersionCoefficients {
                        a2: c_lo.a2 + (c_hi.a2 - c_lo.a2) * i / span,
                        a3: c_lo.a3 + (c_hi.a3 - c_lo.a3) * i / span,
                    }
                })
                .collect())
        }
    }
}

pub fn reconstruct_channels(
    frame: &Spectrogram,
    coeffs: &[DispersionCoefficients],
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<ChannelStack> {
    if coeffs.is_empty() {
        return Err(Error::Empty("no channel coefficients"));
    }
    check_ordered(coeffs)?;
    let prepared = PreparedFrame::new(frame, grid, cfg)?;
    let channels = coeffs
        .par_iter()
        .map(|c| prepared.image(c))
        .collect::<Result<Vec<_>>>()?;
    ChannelStack::new(channels, coeffs.to_vec())
}

pub fn stitch_ground_truth(stack: &ChannelStack, bands: &BandMap) -> Result<BScan> {
    let (n_z, n_a) = stack.dim();
    bands.validate(n_z, stack.len())?;
    let mut out = Array2::<f64>::zeros((n_z, n_a));
    for b in &bands.bands {
        out.slice_mut(s![b.start..b.end, ..])
            .assign(&stack.channels[b.channel].pixels.slice(s![b.start..b.end, ..]));
    }
    if bands.blend_px > 0 {
        for pair in bands.bands.windows(2) {
            let (upper, lower) = (pair[0].channel, pair[1].channel);
            if upper == lower {
                continue;
            }
            let a = &stack.channels[upper].pixels;
            let b = &stack.channels[lower].pixels;
            let first = pair[0].end - bands.blend_px / 2;
            for r in first..first + bands.blend_px {
                let w = (r - first) as f64 + 0.5;
                let w = w / bands.blend_px as f64;
                for c in 0..n_a {
                    let (va, vb) = (a[[r, c]], b[[r, c]]);
                    out[[r, c]] = va + w * (vb - va);
                }
            }
        }
    }
    Ok(BScan::linear(out, stack.channels[0].axial_pixel_um))
}

/// Non-learned fusion baseline: every profile band is taken from the
/// available channel with the nearest `a2`.
pub fn fuse_best_band(stack: &ChannelStack, profile: &DispersionProfile) -> Result<BScan> {
    profile.validate(stack.dim().0)?;
    stitch_ground_truth(stack, &BandMap::nearest(profile, stack, default_blend(profile)))
}

/// Distinct profile coefficients sorted by `a2`.
pub fn profile_channel_coeffs(profile: &DispersionProfile) -> Result<Vec<DispersionCoefficients>> {
    let mut coeffs = profile.coefficients();
    coeffs.sort_by(|a, b| a.a2.total_cmp(&b.a2).then(a.a3.total_cmp(&b.a3)));
    coeffs.dedup();
    check_ordered(&coeffs)?;
    Ok(coeffs)
}

/// Reconstruct one channel per distinct profile coefficient and stitch them.
pub fn reconstruct_profile(
    frame: &Spectrogram,
    profile: &DispersionProfile,
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
) -> Result<BScan> {
    profile.validate(grid.n_z())?;
    let stack = reconstruct_channels(frame, &profile_channel_coeffs(profile)?, grid, cfg)?;
    stitch_ground_truth(&stack, &BandMap::matching(profile, &stack, default_blend(profile))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_channels(k: usize) -> ChannelStack {
        let channels = (0..k)
            .map(|i| {
                BScan::linear(
                    Array2::from_shape_fn((40, 3), |(r, c)| (i * 100 + r * 3 + c) as f64),
                    1.5,
                )
            })
            .collect();
        let coeffs = (0..k)
            .map(|i| DispersionCoefficients::second_order(i as f64))
            .collect();
        ChannelStack::new(channels, coeffs).unwrap()
    }

    fn map(assign: &[(usize, usize, usize)], blend_px: usize) -> BandMap {
        BandMap {
            bands: assign
                .iter()
                .map(|&(start, end, channel)| BandAssignment { start, end, channel })
                .collect(),
            blend_px,
        }
    }

    #[test]
    fn channel_selection_spacing() {
        let lo = DispersionCoefficients::second_order(10.0);
        let hi = DispersionCoefficients::second_order(50.0);
        let a2 = |k| -> Vec<f64> {
            select_channel_coeffs(lo, hi, k).unwrap().iter().map(|c| c.a2).collect()
        };
        assert_eq!(a2(5), vec![10.0, 20.0, 30.0, 40.0, 50.0]);
        assert_eq!(a2(1), vec![10.0]);
        assert_eq!(a2(2), vec![10.0, 50.0]);
        assert!(select_channel_coeffs(lo, hi, 0).is_err());
        // nested sets agree bit-for-bit
        let (k3, k5, k9) = (a2(3), a2(5), a2(9));
        assert_eq!(k3, vec![k5[0], k5[2], k5[4]]);
        assert!(k5.iter().enumerate().all(|(i, v)| *v == k9[2 * i]));
    }

    #[test]
    fn stack_rejects_duplicate_coefficients() {
        let b = BScan::linear(Array2::zeros((4, 2)), 1.5);
        let c = DispersionCoefficients::second_order(1.0);
        assert!(ChannelStack::new(vec![b.clone(), b], vec![c, c]).is_err());
    }

    #[test]
    fn single_channel_assignment_is_identity() {
        let stack = ramp_channels(3);
        let out = stitch_ground_truth(&stack, &map(&[(0, 10, 1), (10, 25, 1), (25, 40, 1)], 6)).unwrap();
        assert_eq!(out.pixels, stack.channels()[1].pixels);
    }

    #[test]
    fn hard_seams_copy_rows() {
        let stack = ramp_channels(3);
        let out = stitch_ground_truth(&stack, &map(&[(0, 10, 0), (10, 25, 2), (25, 40, 1)], 0)).unwrap();
        for r in 0..40 {
            let ch = if r < 10 { 0 } else if r < 25 { 2 } else { 1 };
            assert_eq!(out.pixels.row(r), stack.channels()[ch].pixels.row(r));
        }
    }

    #[test]
    fn blend_is_linear_and_confined() {
        let stack = ramp_channels(2);
        let out = stitch_ground_truth(&stack, &map(&[(0, 20, 0), (20, 40, 1)], 4)).unwrap();
        for r in (0..18).chain(22..40) {
            let ch = usize::from(r >= 20);
            assert_eq!(out.pixels.row(r), stack.channels()[ch].pixels.row(r));
        }
        // channel 1 is channel 0 plus 100 everywhere
        for (i, r) in (18..22).enumerate() {
            let w = (i as f64 + 0.5) / 4.0;
            let expect = stack.channels()[0].pixels[[r, 0]] + 100.0 * w;
            assert!((out.pixels[[r, 0]] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_maps_rejected() {
        let stack = ramp_channels(2);
        assert!(stitch_ground_truth(&stack, &map(&[(0, 20, 0), (21, 40, 1)], 0)).is_err());
        assert!(stitch_ground_truth(&stack, &map(&[(0, 20, 0), (20, 39, 1)], 0)).is_err());
        assert!(stitch_ground_truth(&stack, &map(&[(0, 5, 0), (5, 40, 1)], 5)).is_err());
        assert!(stitch_ground_truth(&stack, &map(&[(0, 20, 0), (20, 40, 2)], 0)).is_err());
    }

    #[test]
    fn nearest_ties_go_low() {
        let stack = ramp_channels(3); // a2 = 0, 1, 2
        assert_eq!(stack.nearest(0.5), 0);
        assert_eq!(stack.nearest(1.5), 1);
        assert_eq!(stack.nearest(7.0), 2);
    }
}
