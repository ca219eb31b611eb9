//! WAV ingestion and input/output path handling.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spikecodec::AudioSignal;

use crate::config::usage;

pub const SAMPLE_RATE_HZ: u32 = 20_000;

/// Reads a mono 20 kHz WAV: 8/16-bit integer PCM or 32-bit float, scaled to
/// [-1, 1).
pub fn read_wav(path: &Path) -> Result<AudioSignal> {
    let mut reader = hound::WavReader::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        bail!("expected mono, got {} channels", spec.channels);
    }
    if spec.sample_rate != SAMPLE_RATE_HZ {
        bail!("expected {SAMPLE_RATE_HZ} Hz, got {} Hz", spec.sample_rate);
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (8 | 16)) => {
            let scale = f64::from(1u32 << (bits - 1));
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) / scale))
                .collect::<Result<_, _>>()?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        (format, bits) => bail!("unsupported sample format: {bits}-bit {format:?}"),
    };
    Ok(AudioSignal::new(samples, f64::from(SAMPLE_RATE_HZ))?)
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn walk(dir: &Path, ext: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            walk(&path, ext, out)?;
        } else if has_ext(&path, ext) {
            out.push(path);
        }
    }
    Ok(())
}

/// Expands directories (recursively, files with `ext`) and glob patterns,
/// keeping explicit files as given. The result is sorted lexicographically.
pub fn expand_inputs(inputs: &[PathBuf], ext: &str) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(usage("no input files given"));
    }
    let mut out = Vec::new();
    for input in inputs {
        let text = input.to_string_lossy();
        if input.is_dir() {
            walk(input, ext, &mut out)?;
        } else if text.contains(['*', '?', '[']) {
            let pattern = glob::glob(&text).map_err(|e| usage(format!("bad pattern {text:?}: {e}")))?;
            for path in pattern {
                out.push(path?);
            }
        } else {
            out.push(input.clone());
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(usage("no input files matched"));
    }
    Ok(out)
}

/// `out_dir/<stem>.<ext>` for each input; distinct inputs sharing a stem are
/// rejected rather than silently overwritten.
pub fn output_paths(inputs: &[PathBuf], out_dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut seen = HashSet::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .ok_or_else(|| usage(format!("input {} has no file name", p.display())))?;
            if !seen.insert(stem.to_owned()) {
                return Err(usage(format!(
                    "two inputs share the name {:?}; outputs would collide",
                    stem
                )));
            }
            Ok(out_dir.join(stem).with_extension(ext))
        })
        .collect()
}

pub fn display_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_must_be_unique() {
        let inputs = vec![PathBuf::from("a/x.wav"), PathBuf::from("b/x.wav")];
        assert!(output_paths(&inputs, Path::new("out"), "aer").is_err());
        let inputs = vec![PathBuf::from("a/x.wav"), PathBuf::from("b/y.wav")];
        assert_eq!(
            output_paths(&inputs, Path::new("out"), "aer").unwrap(),
            vec![PathBuf::from("out/x.aer"), PathBuf::from("out/y.aer")]
        );
    }

    #[test]
    fn empty_input_list_is_a_usage_error() {
        let err = expand_inputs(&[], "wav").unwrap_err();
        assert!(err.downcast_ref::<crate::config::UsageError>().is_some());
    }
}
