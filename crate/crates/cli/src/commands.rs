use std::path::{Path, PathBuf};

use ndarray::Array2;
use octdisp::dataset::{emit_dataset, DatasetOptions};
use octdisp::diffmap::{diff_map, to_gray, write_png};
use octdisp::metrics::{MetricReport, MsSsimConfig, PsnrPeak};
use octdisp::octbin::{Kind, OctBin};
use octdisp::profile::{axial_profile, ProfileConfig};
use octdisp::recon::{average_frames, log_display, reconstruct_bscan, Background, Compensation};
use octdisp::sim::{reference_spectrum, synthesize_volume};
use octdisp::stitch::{
    default_blend, profile_channel_coeffs, reconstruct_channels, stitch_ground_truth, BandMap,
    ChannelStack,
};
use octdisp::{
    fuse_best_band, search_depth_bands, search_global_a2, BScan, DispersionCoefficients,
    DispersionProfile, Domain, ReconstructionConfig, Scale, Spectrogram, WavenumberGrid,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Inputs shared by every subcommand that reconstructs spectrograms.
pub struct ReconInputs {
    pub config: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

impl ReconInputs {
    fn run_config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    fn recon_config(&self, cfg: &RunConfig, grid: &WavenumberGrid) -> Result<ReconstructionConfig> {
        let mut rc = cfg.reconstruction.clone();
        if let Some(path) = &self.reference {
            let file = OctBin::read(path)?;
            if file.header.kind != Kind::Spectrogram || file.planes() != 1 {
                return Err(CliError::Format(format!(
                    "{}: reference must be a one-plane spectrogram file",
                    path.display()
                )));
            }
            let plane = file.plane(0);
            if plane.nrows() != grid.n_k() {
                return Err(CliError::Invalid(format!(
                    "reference has {} samples, grid has {}",
                    plane.nrows(),
                    grid.n_k()
                )));
            }
            rc.background = Background::Reference(plane.column(0).to_vec());
        }
        Ok(rc)
    }
}

struct Volume {
    frames: Vec<Spectrogram>,
    grid: WavenumberGrid,
    grid_spec: octdisp::GridSpec,
}

fn load_volume(path: &Path, cfg: &RunConfig) -> Result<Volume> {
    let file = OctBin::read(path)?;
    if file.header.kind != Kind::Spectrogram {
        return Err(CliError::Format(format!(
            "{}: expected a spectrogram file, found {:?}",
            path.display(),
            file.header.kind
        )));
    }
    let grid_spec = file.header.grid.unwrap_or(cfg.grid);
    let grid = grid_spec.build()?;
    let frames = file.to_spectrograms()?;
    Ok(Volume {
        frames,
        grid,
        grid_spec,
    })
}

fn load_bscans(path: &Path) -> Result<(OctBin, Vec<BScan>)> {
    let file = OctBin::read(path)?;
    let frames = file.to_bscans()?;
    Ok((file, frames))
}

pub fn load_profile(path: &Path) -> Result<DispersionProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn simulate(config: Option<&Path>, out: Option<&Path>, reference_out: Option<&Path>) -> Result<()> {
    let cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.outputs.volume.clone())
        .ok_or_else(|| CliError::Usage("no output path (--out or outputs.volume)".into()))?;
    let grid = cfg.build_grid()?;
    let phantoms = cfg.phantoms(&grid);
    let frames = synthesize_volume(
        &phantoms,
        &cfg.source,
        &cfg.noise,
        cfg.volume.repeats,
        &grid,
        Domain::Wavelength,
    )?;
    OctBin::from_spectrograms(&frames, Some(cfg.grid))?.write(&out)?;

    if let Some(path) = reference_out.map(Path::to_path_buf).or_else(|| cfg.outputs.reference.clone()) {
        let r = reference_spectrum(&cfg.source, &grid, Domain::Wavelength);
        let n = r.len();
        let plane = Array2::from_shape_vec((n, 1), r).expect("n x 1 shape");
        OctBin::from_spectrograms(&[Spectrogram::new(plane, Domain::Wavelength)], Some(cfg.grid))?
            .write(&path)?;
    }
    Ok(())
}

pub enum Coefficients {
    Global(DispersionCoefficients),
    Profile(PathBuf),
}

pub fn reconstruct(
    input: &Path,
    coeffs: Coefficients,
    average: usize,
    ri: &ReconInputs,
    out: &Path,
    png: Option<&Path>,
) -> Result<()> {
    let cfg = ri.run_config()?;
    let vol = load_volume(input, &cfg)?;
    let rc = ri.recon_config(&cfg, &vol.grid)?;
    let profile = match &coeffs {
        Coefficients::Profile(p) => Some(load_profile(p)?),
        Coefficients::Global(c) => {
            c.validate(octdisp::dispersion::DEFAULT_COEFF_BOUND)?;
            None
        }
    };
    let comp = match (&coeffs, &profile) {
        (Coefficients::Global(c), _) => Compensation::Global(*c),
        (_, Some(p)) => Compensation::Profile(p),
        _ => unreachable!("profile loaded above"),
    };
    if average == 0 || vol.frames.len() % average != 0 {
        return Err(CliError::Invalid(format!(
            "cannot average {} frames in groups of {average}",
            vol.frames.len()
        )));
    }
    let images = vol
        .frames
        .par_iter()
        .map(|f| reconstruct_bscan(f, comp, &vol.grid, &rc))
        .collect::<octdisp::Result<Vec<_>>>()?;
    let images = if average > 1 {
        images
            .chunks(average)
            .map(average_frames)
            .collect::<octdisp::Result<Vec<_>>>()?
    } else {
        images
    };

    let mut file = OctBin::from_bscans(Kind::Bscan, &images)?;
    match (&coeffs, profile) {
        (Coefficients::Global(c), _) => file.header.coefficients = vec![*c],
        (_, p) => file.header.profile = p,
    }
    file.header.grid = Some(vol.grid_spec);
    file.write(out)?;

    if let Some(png) = png {
        let display = log_display(&images[0], rc.log_floor_db)?;
        write_png(&to_gray(&display), png)?;
    }
    Ok(())
}

pub fn search(
    input: &Path,
    frame: usize,
    bands: usize,
    band_range: Option<[usize; 2]>,
    ri: &ReconInputs,
    out: &Path,
) -> Result<()> {
    let cfg = ri.run_config()?;
    let vol = load_volume(input, &cfg)?;
    let rc = ri.recon_config(&cfg, &vol.grid)?;
    let f = vol.frames.get(frame).ok_or_else(|| {
        CliError::Invalid(format!("frame {frame} out of range ({} frames)", vol.frames.len()))
    })?;
    let mut scfg = cfg.search;
    if band_range.is_some() {
        scfg.band_range = band_range;
    }
    let profile = match bands {
        0 => return Err(CliError::Invalid("--bands must be >= 1".into())),
        1 if scfg.band_range.is_none() => {
            let outcome = search_global_a2(f, &vol.grid, &rc, &scfg)?;
            DispersionProfile::uniform(vol.grid.n_z(), outcome.coeffs)
        }
        n => search_depth_bands(f, n, &vol.grid, &rc, &scfg)?,
    };
    write_json(out, &profile)
}

pub fn stitch(
    input: &Path,
    profile: &Path,
    blend_px: Option<usize>,
    ri: &ReconInputs,
    out: &Path,
) -> Result<()> {
    let cfg = ri.run_config()?;
    let vol = load_volume(input, &cfg)?;
    let rc = ri.recon_config(&cfg, &vol.grid)?;
    let profile = load_profile(profile)?;
    profile.validate(vol.grid.n_z())?;
    let coeffs = profile_channel_coeffs(&profile)?;
    let blend = blend_px.unwrap_or_else(|| default_blend(&profile));
    let gts = vol
        .frames
        .par_iter()
        .map(|f| {
            let stack = reconstruct_channels(f, &coeffs, &vol.grid, &rc)?;
            stitch_ground_truth(&stack, &BandMap::matching(&profile, &stack, blend)?)
        })
        .collect::<octdisp::Result<Vec<_>>>()?;
    let mut file = OctBin::from_bscans(Kind::GroundTruth, &gts)?;
    file.header.profile = Some(profile);
    file.header.grid = Some(vol.grid_spec);
    file.write(out)?;
    Ok(())
}

pub struct EmitArgs {
    pub k: Option<usize>,
    pub c_lo: Option<f64>,
    pub c_hi: Option<f64>,
    pub blend_px: Option<usize>,
    pub allow_any_k: bool,
}

pub fn emit(input: &Path, profile: &Path, args: EmitArgs, ri: &ReconInputs, out_dir: &Path) -> Result<()> {
    let cfg = ri.run_config()?;
    let vol = load_volume(input, &cfg)?;
    let rc = ri.recon_config(&cfg, &vol.grid)?;
    let profile = load_profile(profile)?;
    let a2s = profile.bands.iter().map(|b| b.a2);
    let lo = a2s.clone().fold(f64::INFINITY, f64::min);
    let hi = a2s.fold(f64::NEG_INFINITY, f64::max);
    let opts = DatasetOptions {
        k: args.k.unwrap_or(cfg.dataset.k),
        c_lo: DispersionCoefficients::second_order(args.c_lo.unwrap_or(lo)),
        c_hi: DispersionCoefficients::second_order(args.c_hi.unwrap_or(hi)),
        gt_profile: profile,
        blend_px: args.blend_px.or(cfg.dataset.blend_px),
        allow_any_k: args.allow_any_k || cfg.dataset.allow_any_k,
        seed: ri.config.as_ref().map(|_| cfg.noise.seed),
        phantom_hash: ri.config.as_ref().map(|_| cfg.phantom_hash()),
        grid_spec: Some(vol.grid_spec),
    };
    emit_dataset(&vol.frames, &vol.grid, &rc, &opts, out_dir)?;
    Ok(())
}

pub fn fuse(input: &Path, profile: &Path, out: &Path) -> Result<()> {
    let file = OctBin::read(input)?;
    if file.header.kind != Kind::Stack {
        return Err(CliError::Format(format!(
            "{}: expected a channel stack, found {:?}",
            input.display(),
            file.header.kind
        )));
    }
    if file.header.coefficients.len() != file.planes() {
        return Err(CliError::Format(format!(
            "{}: {} coefficient entries for {} planes",
            input.display(),
            file.header.coefficients.len(),
            file.planes()
        )));
    }
    let stack = ChannelStack::new(file.to_bscans()?, file.header.coefficients.clone())?;
    let profile = load_profile(profile)?;
    let fused = fuse_best_band(&stack, &profile)?;
    let mut out_file = OctBin::from_bscans(Kind::Bscan, std::slice::from_ref(&fused))?;
    out_file.header.profile = Some(profile);
    out_file.header.grid = file.header.grid;
    out_file.write(out)?;
    Ok(())
}

/// Per-plane reports of one `metrics` run.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct MetricSummary {
    pub frames: Vec<MetricReport>,
    pub mean_ms_ssim: f64,
    /// Mean over planes that differ; `None` when every plane is identical.
    pub mean_psnr_db: Option<f64>,
    pub identical_planes: usize,
}

pub struct MetricArgs {
    pub peak: Option<f64>,
    pub scales: Option<usize>,
    pub diff_png: Option<PathBuf>,
    pub diff_plane: usize,
}

pub fn metrics(gt: &Path, test: &Path, args: MetricArgs, out: &Path) -> Result<()> {
    let (_, g) = load_bscans(gt)?;
    let (_, t) = load_bscans(test)?;
    if g.len() != t.len() {
        return Err(CliError::Invalid(format!(
            "plane counts differ: {} vs {}",
            g.len(),
            t.len()
        )));
    }
    if g.iter().chain(&t).any(|b| b.scale != Scale::Linear) {
        return Err(CliError::Invalid("metrics need linear-scale images".into()));
    }
    let mut cfg = MsSsimConfig::default();
    if let Some(m) = args.scales {
        cfg = cfg.with_scales(m);
    }
    let peak = args.peak.map_or(PsnrPeak::MaxOfReconstructed, PsnrPeak::Fixed);
    let frames = g
        .par_iter()
        .zip(&t)
        .enumerate()
        .map(|(i, (a, b))| {
            MetricReport::evaluate(&a.pixels.view(), &b.pixels.view(), peak, &cfg, Some(format!("{i}")))
        })
        .collect::<octdisp::Result<Vec<_>>>()?;
    let n = frames.len() as f64;
    let db: Vec<f64> = frames.iter().filter_map(|r| r.psnr_db).collect();
    let summary = MetricSummary {
        mean_ms_ssim: frames.iter().map(|r| r.ms_ssim).sum::<f64>() / n,
        mean_psnr_db: (!db.is_empty()).then(|| db.iter().sum::<f64>() / db.len() as f64),
        identical_planes: frames.iter().filter(|r| r.identical).count(),
        frames,
    };
    write_json(out, &summary)?;

    if let Some(png) = &args.diff_png {
        let i = args.diff_plane;
        if i >= g.len() {
            return Err(CliError::Invalid(format!("diff plane {i} out of range")));
        }
        write_png(&diff_map(&g[i].pixels.view(), &t[i].pixels.view())?, png)?;
    }
    Ok(())
}

pub struct ProfileArgs {
    pub column: usize,
    pub n_cols: usize,
    pub n_frames: usize,
    pub prominence: f64,
    pub labels: Vec<String>,
    pub csv: Option<PathBuf>,
    pub peaks_csv: Option<PathBuf>,
}

pub fn profile(inputs: &[PathBuf], args: ProfileArgs, out: &Path) -> Result<()> {
    let mut frames = Vec::new();
    for p in inputs {
        frames.extend(load_bscans(p)?.1);
    }
    let cfg = ProfileConfig {
        n_cols: args.n_cols,
        n_frames: args.n_frames,
        prominence: args.prominence,
        labels: args.labels,
    };
    let report = axial_profile(&frames, args.column, &cfg)?;
    write_json(out, &report)?;
    if let Some(p) = &args.csv {
        write_text(p, &report.profile_csv())?;
    }
    if let Some(p) = &args.peaks_csv {
        write_text(p, &report.peaks_csv())?;
    }
    Ok(())
}
