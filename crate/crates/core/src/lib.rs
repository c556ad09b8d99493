//! Spectral-domain OCT dispersion laboratory: simulate dispersive spectrograms
//! from layered phantoms, reconstruct and compensate them globally or per depth
//! band, stitch depth-resolved ground truth, emit multi-channel datasets and
//! score images with PSNR, MS-SSIM and axial profiles.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod diffmap;
pub mod dispersion;
pub mod error;
pub mod frame;
pub mod grid;
pub mod interp;
pub mod metrics;
pub mod octbin;
pub mod profile;
pub mod recon;
pub mod search;
pub mod sharpness;
pub mod sim;
pub mod stitch;

pub use dataset::{emit_dataset, DatasetManifest, DatasetOptions};
pub use dispersion::{band_edges, DepthBand, DispersionCoefficients, DispersionProfile};
pub use error::{Error, Result};
pub use frame::{BScan, Domain, Scale, Spectrogram};
pub use grid::{GridSpec, WavenumberGrid};
pub use metrics::{ms_ssim, mse, psnr, MetricReport, MsSsimConfig, Psnr};
pub use octbin::OctBin;
pub use profile::{axial_profile, ProfileConfig, ProfileReport};
pub use recon::{reconstruct_bscan, ReconstructionConfig, Window};
pub use search::{search_depth_bands, search_global_a2, SearchConfig};
pub use sharpness::{SharpnessConfig, SharpnessMetric};
pub use stitch::{fuse_best_band, reconstruct_channels, select_channel_coeffs, stitch_ground_truth, BandMap, ChannelStack};
