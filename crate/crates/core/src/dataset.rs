//! Multi-channel training datasets: per frame a k-plane input stack of
//! partially compensated B-scans and a stitched ground-truth plane.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionCoefficients, DispersionProfile};
use crate::error::{Error, Result};
use crate::frame::Spectrogram;
use crate::grid::{GridSpec, WavenumberGrid};
use crate::octbin::{Kind, OctBin};
use crate::recon::{PreparedFrame, ReconstructionConfig};
use crate::stitch::{default_blend, profile_channel_coeffs, select_channel_coeffs, stitch_ground_truth, BandMap, ChannelStack};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STANDARD_CHANNEL_COUNTS: [usize; 5] = [1, 3, 5, 7, 9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub index: usize,
    /// Relative to the dataset directory.
    pub input: String,
    pub ground_truth: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub frame_count: usize,
    /// Rows (depth) and columns (A-lines) of every plane.
    pub dims: [usize; 2],
    pub k: usize,
    pub channel_coeffs: Vec<DispersionCoefficients>,
    pub gt_profile: DispersionProfile,
    pub blend_px: usize,
    pub axial_pixel_um: f64,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
    pub phantom_hash: Option<String>,
    pub frames: Vec<FrameEntry>,
}

impl DatasetManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest version {}", m.version)));
        }
        if m.frames.len() != m.frame_count || m.channel_coeffs.len() != m.k {
            return Err(Error::Format("manifest counts are inconsistent".into()));
        }
        Ok(m)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Input stack and ground truth of frame `i`.
    pub fn read_frame(&self, dir: &Path, i: usize) -> Result<(OctBin, OctBin)> {
        let e = self
            .frames
            .get(i)
            .ok_or_else(|| Error::OutOfRange(format!("frame {i} of {}", self.frame_count)))?;
        Ok((OctBin::read(&dir.join(&e.input))?, OctBin::read(&dir.join(&e.ground_truth))?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub k: usize,
    pub c_lo: DispersionCoefficients,
    pub c_hi: DispersionCoefficients,
    pub gt_profile: DispersionProfile,
    /// Cross-fade width; `None` picks the default for the profile.
    pub blend_px: Option<usize>,
    /// Permit channel counts outside 1, 3, 5, 7, 9.
    pub allow_any_k: bool,
    pub seed: Option<u64>,
    pub phantom_hash: Option<String>,
    pub grid_spec: Option<GridSpec>,
}

fn frame_paths(index: usize) -> (String, String) {
    (
        format!("frames/{index:05}_input.octbin"),
        format!("frames/{index:05}_gt.octbin"),
    )
}

pub fn emit_dataset(
    frames: &[Spectrogram],
    grid: &WavenumberGrid,
    cfg: &ReconstructionConfig,
    opts: &DatasetOptions,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if frames.is_empty() {
        return Err(Error::Empty("no frames to emit"));
    }
    if !opts.allow_any_k && !STANDARD_CHANNEL_COUNTS.contains(&opts.k) {
        return Err(Error::InvalidParameter(format!(
            "k = {} is not one of {STANDARD_CHANNEL_COUNTS:?}",
            opts.k
        )));
    }
    opts.gt_profile.validate(grid.n_z())?;
    let coeffs = select_channel_coeffs(opts.c_lo, opts.c_hi, opts.k)?;
    let gt_coeffs = profile_channel_coeffs(&opts.gt_profile)?;
    let blend_px = opts.blend_px.unwrap_or_else(|| default_blend(&opts.gt_profile));
    let frames_dir: PathBuf = out_dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;

    let entries = frames
        .par_iter()
        .enumerate()
        .map(|(index, frame)| -> Result<FrameEntry> {
            let prepared = PreparedFrame::new(frame, grid, cfg)?;
            let images = |cs: &[DispersionCoefficients]| -> Result<ChannelStack> {
                let imgs = cs.iter().map(|c| prepared.image(c)).collect::<Result<Vec<_>>>()?;
                ChannelStack::new(imgs, cs.to_vec())
            };
            let input = images(&coeffs)?;
            let gt_stack = images(&gt_coeffs)?;
            let gt = stitch_ground_truth(
                &gt_stack,
                &BandMap::matching(&opts.gt_profile, &gt_stack, blend_px)?,
            )?;

            let (input_rel, gt_rel) = frame_paths(index);
            let mut input_file = OctBin::from_bscans(Kind::Stack, input.channels())?;
            input_file.header.coefficients = coeffs.clone();
            input_file.header.grid = opts.grid_spec;
            input_file.write(&out_dir.join(&input_rel))?;
            let mut gt_file = OctBin::from_bscans(Kind::GroundTruth, std::slice::from_ref(&gt))?;
            gt_file.header.profile = Some(opts.gt_profile.clone());
            gt_file.header.grid = opts.grid_spec;
            gt_file.write(&out_dir.join(&gt_rel))?;
            Ok(FrameEntry {
                index,
                input: input_rel,
                ground_truth: gt_rel,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        frame_count: entries.len(),
        dims: [grid.n_z(), frames[0].n_alines()],
        k: opts.k,
        channel_coeffs: coeffs,
        gt_profile: opts.gt_profile.clone(),
        blend_px,
        axial_pixel_um: grid.axial_pixel_um(),
        grid: opts.grid_spec,
        seed: opts.seed,
        phantom_hash: opts.phantom_hash.clone(),
        frames: entries,
    };
    manifest.save(out_dir)?;
    Ok(manifest)
}
