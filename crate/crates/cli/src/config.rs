//! Run configuration: command-line flags layered over an optional flat
//! `key=value` config file, with `SPIKECODEC_THREADS` as the parallelism
//! default.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use spikecodec::Frontend;

pub const THREADS_ENV: &str = "SPIKECODEC_THREADS";

/// Invalid invocation; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Keys read from a config file. Blank lines and `#` comments are ignored.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if given, else the parsed config entry.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| usage(format!("config key {key}: cannot parse {v:?}: {e}")))
            })
            .transpose()
    }
}

/// Everything a batch run needs once flags, config file and environment are
/// merged.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub frontend: Frontend,
    pub encoder: Option<String>,
    pub params: Vec<String>,
    pub bsa_params: Option<PathBuf>,
    pub grid: Option<String>,
    pub tick_ns: Option<u32>,
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub parallelism: usize,
}

/// Flags shared by every subcommand before merging.
#[derive(Debug, Default, Clone)]
pub struct Flags {
    pub frontend: Option<Frontend>,
    pub encoder: Option<String>,
    pub params: Vec<String>,
    pub bsa_params: Option<PathBuf>,
    pub grid: Option<String>,
    pub tick_ns: Option<u32>,
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub parallelism: Option<usize>,
}

impl RunConfig {
    pub fn resolve(flags: Flags, file: &ConfigFile) -> Result<Self> {
        let parallelism = match file.pick(flags.parallelism, "parallelism")? {
            Some(n) => n,
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
                Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
            },
        };
        if parallelism == 0 {
            return Err(usage("parallelism must be at least 1"));
        }
        let params = if flags.params.is_empty() {
            file.get("params").map(|p| vec![p.to_string()]).unwrap_or_default()
        } else {
            flags.params
        };
        let inputs = if flags.inputs.is_empty() {
            file.get("inputs")
                .map(|v| v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PathBuf::from).collect())
                .unwrap_or_default()
        } else {
            flags.inputs
        };
        Ok(Self {
            frontend: file.pick(flags.frontend, "frontend")?.unwrap_or(Frontend::Cochleagram),
            encoder: file.pick(flags.encoder, "encoder")?,
            params,
            bsa_params: file.pick(flags.bsa_params, "bsa_params")?,
            grid: file.pick(flags.grid, "grid")?,
            tick_ns: file.pick(flags.tick_ns, "tick_ns")?,
            inputs,
            out: file.pick(flags.out, "out")?,
            seed: file.pick(flags.seed, "seed")?.unwrap_or(0),
            parallelism,
        })
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| usage("--out is required"))
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .context("cannot start worker pool")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("# run\nfrontend = spectrogram\nseed=7\nparallelism=3\ninputs=a.wav, b.wav\n").unwrap();
        let cfg = RunConfig::resolve(Flags::default(), &file).unwrap();
        assert_eq!(cfg.frontend, Frontend::Spectrogram);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.parallelism, 3);
        assert_eq!(cfg.inputs, vec![PathBuf::from("a.wav"), PathBuf::from("b.wav")]);

        let flags = Flags {
            seed: Some(1),
            parallelism: Some(2),
            ..Flags::default()
        };
        let cfg = RunConfig::resolve(flags, &file).unwrap();
        assert_eq!((cfg.seed, cfg.parallelism), (1, 2));
    }

    #[test]
    fn bad_lines_are_usage_errors() {
        assert!(ConfigFile::parse("frontend").is_err());
        let file = ConfigFile::parse("seed=x").unwrap();
        let err = RunConfig::resolve(Flags::default(), &file).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
