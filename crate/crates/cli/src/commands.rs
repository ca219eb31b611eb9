//! Batch subcommands. Work is spread over a bounded worker pool per
//! utterance; results are collected and emitted in input order so outputs do
//! not depend on the degree of parallelism.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use spikecodec::codec::{decode_bsa, decode_spikes, pad_for_classifier, read_aer, to_aer, Tensor};
use spikecodec::encoders::{optimize_bsa, BsaGrid};
use spikecodec::metrics::{aggregate, fmt_sig6, MetricsReport};
use spikecodec::sweep::{evaluate, format_table, GridSpec, SweepRow};
use spikecodec::{features, TfRepresentation};

use crate::config::{usage, RunConfig};
use crate::io::{display_name, expand_inputs, output_paths, read_wav};
use crate::params::{encoder_params, format_bsa_params, read_bsa_params, sweep_kind};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Runs `work` over the inputs on the pool, returning results in input order.
fn per_input<T: Send>(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    work: impl Fn(&Path) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    let pool = cfg.pool()?;
    Ok(pool.install(|| inputs.par_iter().map(|p| work(p)).collect()))
}

fn finish(failures: usize, total: usize) -> Result<()> {
    if failures > 0 {
        bail!("{failures} of {total} inputs failed");
    }
    Ok(())
}

fn load_features(path: &Path, frontend: spikecodec::Frontend) -> Result<TfRepresentation> {
    let signal = read_wav(path)?;
    let normalized = features::extract(&signal, frontend)?;
    if normalized.silent {
        log::warn!("{}: silent input", display_name(path));
    }
    Ok(normalized.tf)
}

/// Extracts a whole corpus; any failing file aborts the run.
fn load_corpus(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<Vec<TfRepresentation>> {
    per_input(cfg, inputs, |p| load_features(p, cfg.frontend))?
        .into_iter()
        .zip(inputs)
        .map(|(r, p)| r.with_context(|| display_name(p)))
        .collect()
}

pub fn features(cfg: &RunConfig) -> Result<()> {
    let inputs = expand_inputs(&cfg.inputs, "wav")?;
    let out_dir = cfg.out_dir()?;
    let outputs = output_paths(&inputs, out_dir, "tensor")?;
    create_dir(out_dir)?;
    let results = per_input(cfg, &inputs, |p| {
        let tf = load_features(p, cfg.frontend)?;
        Ok((tf.num_channels(), tf.num_frames(), Tensor::from_tf(&tf).to_bytes()?))
    })?;
    let mut failures = 0;
    for ((input, output), result) in inputs.iter().zip(&outputs).zip(results) {
        let name = display_name(input);
        match result.and_then(|(c, f, bytes)| write_file(output, &bytes).map(|_| (c, f))) {
            Ok((c, f)) => println!("{name}: {} {c}x{f} -> {}", cfg.frontend, output.display()),
            Err(e) => {
                failures += 1;
                log::error!("{name}: {e:#}");
            }
        }
    }
    finish(failures, inputs.len())
}

pub fn encode(cfg: &RunConfig) -> Result<()> {
    let name = cfg.encoder.as_deref().ok_or_else(|| usage("--encoder is required"))?;
    let params = encoder_params(name, &cfg.params, cfg.bsa_params.as_deref())?;
    let tick_ns = cfg.tick_ns.unwrap_or_else(|| params.default_tick_ns());
    if tick_ns == 0 {
        return Err(usage("--tick-ns must be positive"));
    }
    let inputs = expand_inputs(&cfg.inputs, "wav")?;
    let out_dir = cfg.out_dir()?;
    let aer_paths = output_paths(&inputs, out_dir, "aer")?;
    create_dir(out_dir)?;

    let results = per_input(cfg, &inputs, |p| {
        let tf = load_features(p, cfg.frontend)?;
        let (spikes, report) = evaluate(&tf, &params, cfg.frontend)?;
        Ok((spikes.len(), to_aer(&spikes, tick_ns)?, report))
    })?;

    let mut failures = 0;
    let mut reports: Vec<MetricsReport> = Vec::new();
    for ((input, aer_path), result) in inputs.iter().zip(&aer_paths).zip(results) {
        let file = display_name(input);
        let written = result.and_then(|(count, bytes, report)| {
            write_file(aer_path, &bytes)?;
            let record = format!("file={file}\n{}", report.to_record());
            write_file(&aer_path.with_extension("metrics"), record.as_bytes())?;
            Ok((count, report))
        });
        match written {
            Ok((count, report)) => {
                println!("{file}: {count} events, density {}", fmt_sig6(report.spike_density));
                reports.push(report);
            }
            Err(e) => {
                failures += 1;
                log::error!("{file}: {e:#}");
            }
        }
    }
    if !reports.is_empty() {
        let agg = aggregate(&reports)?;
        println!(
            "aggregate: {} files, encoder {}, density {}, snr_db {}, bcr_raw {}, bcr_mfcc {}",
            agg.num_utterances,
            agg.encoder.name(),
            fmt_sig6(agg.spike_density),
            agg.snr_db.map(fmt_sig6).unwrap_or_else(|| "n/a".into()),
            fmt_sig6(agg.bcr_raw),
            fmt_sig6(agg.bcr_mfcc),
        );
    }
    finish(failures, inputs.len())
}

pub fn decode(cfg: &RunConfig, pad_channels: usize, pad_frames: usize) -> Result<()> {
    let inputs = expand_inputs(&cfg.inputs, "aer")?;
    let out_dir = cfg.out_dir()?;
    let outputs = output_paths(&inputs, out_dir, "tensor")?;
    let bsa = cfg.bsa_params.as_deref().map(read_bsa_params).transpose()?;
    create_dir(out_dir)?;
    let results = per_input(cfg, &inputs, |p| {
        let spikes = read_aer(p)?;
        let decoded = match &bsa {
            Some(b) => decode_bsa(&spikes, &b.filter_taps)?,
            None => decode_spikes(&spikes),
        };
        let padded = pad_for_classifier(&decoded, pad_channels, pad_frames)?;
        Ok((spikes.len(), Tensor::from_tf(&padded).to_bytes()?))
    })?;
    let mut failures = 0;
    for ((input, output), result) in inputs.iter().zip(&outputs).zip(results) {
        let name = display_name(input);
        match result.and_then(|(n, bytes)| write_file(output, &bytes).map(|_| n)) {
            Ok(n) => println!("{name}: {n} events -> {pad_channels}x{pad_frames} {}", output.display()),
            Err(e) => {
                failures += 1;
                log::error!("{name}: {e:#}");
            }
        }
    }
    finish(failures, inputs.len())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    let name = cfg.encoder.as_deref().ok_or_else(|| usage("--encoder is required"))?;
    let kind = sweep_kind(name, &cfg.params, cfg.bsa_params.as_deref())?;
    let grid: GridSpec = cfg
        .grid
        .as_deref()
        .ok_or_else(|| usage("--grid is required"))?
        .parse()
        .map_err(|e: spikecodec::Error| usage(e.to_string()))?;
    let inputs = expand_inputs(&cfg.inputs, "wav")?;
    let corpus = load_corpus(cfg, &inputs)?;
    let pool = cfg.pool()?;

    let mut rows = Vec::with_capacity(grid.0.len());
    for &value in &grid.0 {
        let params = kind.with_threshold(value);
        params.validate().map_err(|e| usage(format!("grid value {value}: {e}")))?;
        let reports = pool.install(|| {
            corpus
                .par_iter()
                .map(|tf| evaluate(tf, &params, cfg.frontend).map(|(_, r)| r))
                .collect::<spikecodec::Result<Vec<_>>>()
        })?;
        let row = SweepRow::from_reports(value, &reports)?;
        log::info!("{} {} = {}: density {}", name, params.name(), value, fmt_sig6(row.density));
        rows.push(row);
    }
    let table = format_table(&rows);
    match &cfg.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(parent)?;
            }
            write_file(path, table.as_bytes())?;
            println!("{} rows over {} files -> {}", rows.len(), inputs.len(), path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}

pub fn bsa_optimize(cfg: &RunConfig, grid: &BsaGrid) -> Result<()> {
    grid.validate().map_err(|e| usage(e.to_string()))?;
    let out = cfg.out.as_deref().ok_or_else(|| usage("--out is required"))?;
    let inputs = expand_inputs(&cfg.inputs, "wav")?;
    let corpus = load_corpus(cfg, &inputs)?;
    let choice = optimize_bsa(&corpus, grid, cfg.seed)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(out, format_bsa_params(&choice, cfg.seed).as_bytes())?;
    println!(
        "cutoff {} Hz, {} taps, threshold {}, mean snr {} dB -> {}",
        choice.cutoff_hz,
        choice.filter_len,
        choice.threshold,
        fmt_sig6(choice.snr_db),
        out.display()
    );
    Ok(())
}
