//! `spikecodec` command-line interface.
//!
//! Exit codes: 0 on success, 1 when processing fails, 2 on usage errors.

mod commands;
mod config;
mod io;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use spikecodec::codec::CLASSIFIER_CHANNELS;
use spikecodec::encoders::BsaGrid;
use spikecodec::Frontend;

use config::{usage, ConfigFile, Flags, RunConfig, UsageError};

#[derive(Parser, Debug)]
#[command(name = "spikecodec", version, about = "Spike encoding of audio for neuromorphic front-ends")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat key=value file supplying defaults for any flag.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads [default: $SPIKECODEC_THREADS or CPU count].
    #[arg(long, value_name = "N")]
    parallelism: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write normalized time-frequency tensors for WAV inputs.
    Features {
        inputs: Vec<PathBuf>,
        /// spectrogram or cochleagram [default: cochleagram].
        #[arg(long)]
        frontend: Option<Frontend>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Encode WAV inputs to AER files with per-file metrics.
    Encode {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        frontend: Option<Frontend>,
        /// sod, sod-on, sod-off, ttfs, lif or bsa.
        #[arg(long)]
        encoder: Option<String>,
        /// key=value pairs, e.g. delta=0.01 or threshold=0.05,cutoff_hz=50,filter_len=11.
        #[arg(long, value_name = "K=V,...")]
        params: Vec<String>,
        /// BSA parameter file from `bsa-optimize`.
        #[arg(long, value_name = "FILE")]
        bsa_params: Option<PathBuf>,
        /// AER tick length [default: 62500 for TTFS, 1000000 otherwise].
        #[arg(long)]
        tick_ns: Option<u32>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Decode AER files to zero-padded tensors.
    Decode {
        inputs: Vec<PathBuf>,
        #[arg(long, value_name = "N")]
        pad_channels: Option<usize>,
        /// Target frame count; required.
        #[arg(long, value_name = "N")]
        pad_frames: Option<usize>,
        /// Reconstruct with these BSA taps instead of the moving average.
        #[arg(long, value_name = "FILE")]
        bsa_params: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate density, SNR and BCR over a threshold grid.
    Sweep {
        /// WAV files, directories or glob patterns.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        frontend: Option<Frontend>,
        #[arg(long)]
        encoder: Option<String>,
        /// log:LO:HI:N, lin:LO:HI:N or a comma list.
        #[arg(long)]
        grid: Option<String>,
        /// Fixed parameters (tau_min_ms, tau_max_ms, cutoff_hz, filter_len).
        #[arg(long, value_name = "K=V,...")]
        params: Vec<String>,
        #[arg(long, value_name = "FILE")]
        bsa_params: Option<PathBuf>,
        /// Table file [default: stdout].
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Grid-search BSA filters on a seeded corpus subset.
    BsaOptimize {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        frontend: Option<Frontend>,
        /// Cutoff candidates in Hz.
        #[arg(long, value_delimiter = ',', value_name = "HZ,...")]
        cutoffs: Vec<f64>,
        /// Filter length candidates.
        #[arg(long, value_delimiter = ',', value_name = "N,...")]
        lengths: Vec<usize>,
        /// Threshold candidates.
        #[arg(long, value_delimiter = ',', value_name = "T,...")]
        thresholds: Vec<f64>,
        /// Fraction of the corpus scored [default: 0.1].
        #[arg(long)]
        subset_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Parameter file to write.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ConfigFile> {
    common
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn resolve(common: &Common, flags: Flags) -> Result<(RunConfig, ConfigFile)> {
    let file = load(common)?;
    let flags = Flags {
        parallelism: common.parallelism,
        ..flags
    };
    Ok((RunConfig::resolve(flags, &file)?, file))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Features { inputs, frontend, out, common } => {
            let (cfg, _) = resolve(&common, Flags { inputs, frontend, out, ..Flags::default() })?;
            commands::features(&cfg)
        }
        Command::Encode { inputs, frontend, encoder, params, bsa_params, tick_ns, out, common } => {
            let flags = Flags { inputs, frontend, encoder, params, bsa_params, tick_ns, out, ..Flags::default() };
            let (cfg, _) = resolve(&common, flags)?;
            commands::encode(&cfg)
        }
        Command::Decode { inputs, pad_channels, pad_frames, bsa_params, out, common } => {
            let (cfg, file) = resolve(&common, Flags { inputs, bsa_params, out, ..Flags::default() })?;
            let channels = file.pick(pad_channels, "pad_channels")?.unwrap_or(CLASSIFIER_CHANNELS);
            let frames = file
                .pick(pad_frames, "pad_frames")?
                .ok_or_else(|| usage("--pad-frames is required"))?;
            commands::decode(&cfg, channels, frames)
        }
        Command::Sweep { inputs, frontend, encoder, grid, params, bsa_params, out, common } => {
            let flags = Flags { inputs, frontend, encoder, grid, params, bsa_params, out, ..Flags::default() };
            let (cfg, _) = resolve(&common, flags)?;
            commands::sweep(&cfg)
        }
        Command::BsaOptimize {
            inputs,
            frontend,
            cutoffs,
            lengths,
            thresholds,
            subset_fraction,
            seed,
            out,
            common,
        } => {
            let (cfg, file) = resolve(&common, Flags { inputs, frontend, seed, out, ..Flags::default() })?;
            let default = BsaGrid::default();
            let list = |flag: Vec<f64>, key: &str, fallback: Vec<f64>| -> Result<Vec<f64>> {
                if !flag.is_empty() {
                    return Ok(flag);
                }
                match file.get(key) {
                    Some(v) => v
                        .split(',')
                        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("config key {key}: {v:?}"))))
                        .collect(),
                    None => Ok(fallback),
                }
            };
            let lengths = if lengths.is_empty() {
                list(Vec::new(), "lengths", default.filter_len_candidates.iter().map(|&l| l as f64).collect())?
                    .into_iter()
                    .map(|l| l as usize)
                    .collect()
            } else {
                lengths
            };
            let grid = BsaGrid {
                cutoff_hz_candidates: list(cutoffs, "cutoffs", default.cutoff_hz_candidates)?,
                filter_len_candidates: lengths,
                threshold_candidates: list(thresholds, "thresholds", default.threshold_candidates)?,
                subset_fraction: file.pick(subset_fraction, "subset_fraction")?.unwrap_or(default.subset_fraction),
            };
            commands::bsa_optimize(&cfg, &grid)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
