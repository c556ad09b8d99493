//! `octdisp`: simulate, reconstruct, search, stitch, emit datasets and score
//! images from the command line.

// `!(x >= 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use octdisp::DispersionCoefficients;

use commands::{Coefficients, EmitArgs, MetricArgs, ProfileArgs, ReconInputs};
use error::CliError;

const THREADS_ENV: &str = "OCT_DISP_THREADS";

#[derive(Parser)]
#[command(name = "octdisp", version, about = "Depth-resolved dispersion compensation for SD-OCT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Recon {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One-plane spectrogram file used for background subtraction.
    #[arg(long)]
    reference: Option<PathBuf>,
}

impl Recon {
    fn inputs(self) -> ReconInputs {
        ReconInputs {
            config: self.config,
            reference: self.reference,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the default run configuration as JSON.
    Config,
    /// Synthesize a raw spectrogram volume.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the reference-arm spectrum.
        #[arg(long)]
        reference_out: Option<PathBuf>,
    },
    /// Reconstruct B-scans with one coefficient set or a depth profile.
    #[command(group(ArgGroup::new("coeffs").required(true).args(["a2", "profile"])))]
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        a2: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "a2", default_value_t = 0.0)]
        a3: f64,
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Average consecutive groups of this many frames.
        #[arg(long, default_value_t = 1)]
        average: usize,
        #[command(flatten)]
        recon: Recon,
        #[arg(long)]
        out: PathBuf,
        /// Log-display PNG of the first output frame.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Find the sharpest coefficients for the whole frame or per depth band.
    Search {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long, default_value_t = 1)]
        bands: usize,
        /// Depth window split into bands: START END (pixels).
        #[arg(long, num_args = 2, value_names = ["START", "END"])]
        band_range: Option<Vec<usize>>,
        #[command(flatten)]
        recon: Recon,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble ground-truth images from a depth profile.
    Stitch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        blend_px: Option<usize>,
        #[command(flatten)]
        recon: Recon,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a k-channel training dataset with stitched ground truth.
    EmitDataset {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        c_lo: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        c_hi: Option<f64>,
        #[arg(long)]
        blend_px: Option<usize>,
        /// Accept channel counts other than 1, 3, 5, 7, 9.
        #[arg(long)]
        allow_any_k: bool,
        #[command(flatten)]
        recon: Recon,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fuse a channel stack band by band (non-learned baseline).
    Fuse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR and MS-SSIM of test images against ground truth.
    Metrics {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Fixed PSNR peak instead of the test image maximum.
        #[arg(long)]
        peak: Option<f64>,
        #[arg(long)]
        scales: Option<usize>,
        #[arg(long)]
        diff_png: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        diff_plane: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Averaged axial profile with peak positions and widths.
    Profile {
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        column: usize,
        #[arg(long, default_value_t = 5)]
        n_cols: usize,
        #[arg(long, default_value_t = 6)]
        n_frames: usize,
        #[arg(long, default_value_t = 0.1)]
        prominence: f64,
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        peaks_csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Config => {
            let text = serde_json::to_string_pretty(&config::RunConfig::default())
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        Command::Simulate {
            config,
            out,
            reference_out,
        } => commands::simulate(config.as_deref(), out.as_deref(), reference_out.as_deref()),
        Command::Reconstruct {
            input,
            a2,
            a3,
            profile,
            average,
            recon,
            out,
            png,
        } => {
            let coeffs = match (a2, profile) {
                (Some(a2), None) => Coefficients::Global(DispersionCoefficients { a2, a3 }),
                (None, Some(p)) => Coefficients::Profile(p),
                _ => return Err(CliError::Usage("give exactly one of --a2 and --profile".into())),
            };
            commands::reconstruct(&input, coeffs, average, &recon.inputs(), &out, png.as_deref())
        }
        Command::Search {
            input,
            frame,
            bands,
            band_range,
            recon,
            out,
        } => {
            let band_range = band_range.map(|v| [v[0], v[1]]);
            commands::search(&input, frame, bands, band_range, &recon.inputs(), &out)
        }
        Command::Stitch {
            input,
            profile,
            blend_px,
            recon,
            out,
        } => commands::stitch(&input, &profile, blend_px, &recon.inputs(), &out),
        Command::EmitDataset {
            input,
            profile,
            k,
            c_lo,
            c_hi,
            blend_px,
            allow_any_k,
            recon,
            out_dir,
        } => {
            let args = EmitArgs {
                k,
                c_lo,
                c_hi,
                blend_px,
                allow_any_k,
            };
            commands::emit(&input, &profile, args, &recon.inputs(), &out_dir)
        }
        Command::Fuse {
            input,
            profile,
            out,
        } => commands::fuse(&input, &profile, &out),
        Command::Metrics {
            gt,
            test,
            peak,
            scales,
            diff_png,
            diff_plane,
            out,
        } => {
            let args = MetricArgs {
                peak,
                scales,
                diff_png,
                diff_plane,
            };
            commands::metrics(&gt, &test, args, &out)
        }
        Command::Profile {
            inputs,
            column,
            n_cols,
            n_frames,
            prominence,
            labels,
            csv,
            peaks_csv,
            out,
        } => {
            let args = ProfileArgs {
                column,
                n_cols,
                n_frames,
                prominence,
                labels,
                csv,
                peaks_csv,
            };
            commands::profile(&inputs, args, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => fail(CliError::Usage(e.to_string().trim().to_string())),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ! {
    eprintln!("{}", e.to_json());
    std::process::exit(e.exit_code())
}
