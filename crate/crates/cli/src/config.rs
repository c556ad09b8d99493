use std::path::{Path, PathBuf};

use octdisp::recon::ReconstructionConfig;
use octdisp::search::SearchConfig;
use octdisp::sim::{ramp_phantom, NoiseSpec, Phantom, SourceSpec, Variation};
use octdisp::{GridSpec, WavenumberGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Everything a run needs, as one JSON document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub source: SourceSpec,
    pub noise: NoiseSpec,
    pub phantom: PhantomSpec,
    pub volume: VolumeSpec,
    pub reconstruction: ReconstructionConfig,
    pub search: SearchConfig,
    pub dataset: DatasetSpec,
    pub outputs: Outputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::desk(),
            source: SourceSpec::default(),
            noise: NoiseSpec::default(),
            phantom: PhantomSpec::default(),
            volume: VolumeSpec::default(),
            reconstruction: ReconstructionConfig::default(),
            search: SearchConfig::default(),
            dataset: DatasetSpec::default(),
            outputs: Outputs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhantomSpec {
    Ramp { a2_lo: f64, a2_hi: f64, n_alines: usize },
    Custom { phantom: Phantom },
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec::Ramp {
            a2_lo: 10.0,
            a2_hi: 50.0,
            n_alines: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VolumeSpec {
    pub positions: usize,
    pub repeats: usize,
    pub variation: Variation,
    pub seed: u64,
}

impl Default for VolumeSpec {
    fn default() -> Self {
        Self {
            positions: 64,
            repeats: 1,
            variation: Variation::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub k: usize,
    pub blend_px: Option<usize>,
    pub allow_any_k: bool,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            k: 5,
            blend_px: None,
            allow_any_k: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub volume: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let grid = self.build_grid()?;
        self.source.validate().map_err(config)?;
        self.reconstruction.validate().map_err(config)?;
        self.search.validate().map_err(config)?;
        if self.volume.positions == 0 || self.volume.repeats == 0 {
            return Err(CliError::Config("volume positions and repeats must be >= 1".into()));
        }
        if !(self.noise.sigma >= 0.0) {
            return Err(CliError::Config("noise sigma must be >= 0".into()));
        }
        self.base_phantom(&grid).validate(&grid).map_err(config)
    }

    pub fn build_grid(&self) -> Result<WavenumberGrid, CliError> {
        self.grid.build().map_err(config)
    }

    pub fn base_phantom(&self, grid: &WavenumberGrid) -> Phantom {
        match &self.phantom {
            PhantomSpec::Ramp { a2_lo, a2_hi, n_alines } => ramp_phantom(grid, *a2_lo, *a2_hi, *n_alines),
            PhantomSpec::Custom { phantom } => phantom.clone(),
        }
    }

    /// One phantom per volume position.
    pub fn phantoms(&self, grid: &WavenumberGrid) -> Vec<Phantom> {
        let base = self.base_phantom(grid);
        (0..self.volume.positions)
            .map(|i| self.volume.variation.member(&base, i, self.volume.seed, grid.axial_pixel_um()))
            .collect()
    }

    /// SHA-256 of the geometry-defining parts of the configuration.
    pub fn phantom_hash(&self) -> String {
        let doc = serde_json::json!({
            "grid": self.grid,
            "source": self.source,
            "noise": self.noise,
            "phantom": self.phantom,
            "volume": self.volume,
        });
        hex::encode(Sha256::digest(doc.to_string().as_bytes()))
    }
}

fn config(e: octdisp::Error) -> CliError {
    CliError::Config(e.to_string())
}
