mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;

const PRESET_HELP: &str = "Threshold presets (--preset NAME): \
landsat=0.5, cell-patch=0.55, hall-monitor=0.52, satellite-sensitive=0.3, multispectral-band=0.5. \
An explicit -t/--threshold overrides the preset.";

#[derive(Debug, Parser)]
#[command(
    name = "roughchange",
    version,
    about = "Unsupervised change detection between co-registered images with rough-set clustering",
    after_help = "Exit codes: 0 success, 2 invalid arguments, 3 I/O failure, 4 dimension mismatch."
)]
struct Cli {
    /// key=value configuration file; flags override its entries
    #[arg(long, global = true, env = "ROUGHCHANGE_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct DetectionArgs {
    /// Rough-membership threshold T in [0,1] [default: 0.5]
    #[arg(short = 't', long = "threshold")]
    pub threshold: Option<f64>,

    /// Named threshold preset (see below)
    #[arg(long)]
    pub preset: Option<String>,

    /// Bins per image for the joint attribute codes, 1..=1531 [default: 32]
    #[arg(long)]
    pub bins: Option<u32>,

    /// Candidate-set cutoff rule: otsu | mean | fixed:<t0> [default: otsu]
    #[arg(long = "candidate-rule")]
    pub candidate_rule: Option<String>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ClusterArgs {
    /// FCM fuzzifier m > 1 [default: 2]
    #[arg(long)]
    pub fuzzifier: Option<f64>,

    /// Iteration cap for HCM/FCM [default: 100]
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,

    /// Center-movement convergence tolerance [default: 1e-4]
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect changed pixels between two images and write a binary mask
    #[command(after_help = PRESET_HELP)]
    Detect {
        before: PathBuf,
        after: PathBuf,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Mask output (.png or .pgm) [default: mask.png]
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// JSON report destination; printed to stdout when omitted
        #[arg(long)]
        report: Option<PathBuf>,
        /// Ground-truth mask; adds an "eval" section to the report
        #[arg(long)]
        truth: Option<PathBuf>,
    },

    /// Run a comparison detector: hcm, fcm, or diff (plain differencing,
    /// an approximation of the IOM detector)
    #[command(after_help = "The diff method thresholds the scalar difference at the cutoff \
resolved by --candidate-rule; it approximates IOM and its report carries \
\"iom_approximation\": true.")]
    Baseline {
        /// Method (hcm, fcm, diff), or BEFORE when --method is used
        #[arg(value_name = "METHOD|BEFORE")]
        first: String,
        #[arg(value_name = "BEFORE|AFTER")]
        second: String,
        /// AFTER image when the method is given positionally
        #[arg(value_name = "AFTER")]
        third: Option<String>,
        /// Method when not given positionally: hcm | fcm | diff
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        cluster: ClusterArgs,
        /// Cutoff rule for the diff method: otsu | mean | fixed:<t0> [default: otsu]
        #[arg(long = "candidate-rule")]
        candidate_rule: Option<String>,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },

    /// Detect every frame in a directory against one reference frame
    #[command(after_help = PRESET_HELP)]
    Batch {
        reference: PathBuf,
        frames: PathBuf,
        #[command(flatten)]
        detection: DetectionArgs,
        /// Output directory for masks, reports and summary.json
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },

    /// Generate a synthetic before/after pair and its truth mask
    Synth {
        /// Image size WxH [default: 64x64]
        #[arg(long)]
        size: Option<String>,
        /// Patch rectangle x,y,w,h [default: 16,16,32,32]
        #[arg(long)]
        patch: Option<String>,
        /// Uniform per-channel noise amplitude [default: 0]
        #[arg(long)]
        noise: Option<u8>,
        /// Noise seed [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Background color r,g,b [default: 30,60,30]
        #[arg(long)]
        background: Option<String>,
        /// Patch color r,g,b [default: 200,180,150]
        #[arg(long = "patch-color")]
        patch_color: Option<String>,
        /// Output directory [default: .]
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },

    /// Compare a predicted mask against a ground-truth mask
    Eval {
        pred: PathBuf,
        truth: PathBuf,
        /// JSON destination; printed to stdout when omitted
        #[arg(long)]
        report: Option<PathBuf>,
    },

    /// Emit one CSV row of metrics per threshold T = 0.1, 0.2, ..., 1.0
    Sweep {
        before: PathBuf,
        after: PathBuf,
        #[arg(long, required = true)]
        truth: PathBuf,
        #[command(flatten)]
        detection: DetectionArgs,
        /// CSV destination; printed to stdout when omitted
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Detect {
            before,
            after,
            detection,
            output,
            report,
            truth,
        } => commands::detect(&config, &before, &after, &detection, output, report, truth),
        Command::Baseline {
            first,
            second,
            third,
            method,
            cluster,
            candidate_rule,
            output,
            report,
            truth,
        } => commands::baseline(
            &config,
            &[Some(first), Some(second), third]
                .into_iter()
                .flatten()
                .collect::<Vec<_>>(),
            method,
            &cluster,
            candidate_rule,
            output,
            report,
            truth,
        ),
        Command::Batch {
            reference,
            frames,
            detection,
            output,
        } => commands::batch(&config, &reference, &frames, &detection, output),
        Command::Synth {
            size,
            patch,
            noise,
            seed,
            background,
            patch_color,
            output,
        } => commands::synth(
            &config,
            commands::SynthArgs {
                size,
                patch,
                noise,
                seed,
                background,
                patch_color,
                output,
            },
        ),
        Command::Eval {
            pred,
            truth,
            report,
        } => commands::eval(&pred, &truth, report),
        Command::Sweep {
            before,
            after,
            truth,
            detection,
            output,
        } => commands::sweep(&config, &before, &after, &truth, &detection, output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
