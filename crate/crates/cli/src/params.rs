//! Encoder selection from `--encoder`, `--params key=value,...` and BSA
//! parameter files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use spikecodec::encoders::{bsa_filter, BsaChoice};
use spikecodec::sweep::EncoderKind;
use spikecodec::{EncoderParams, LifTauMap, LifTaus, SodMode};

use crate::config::usage;

/// Frame rate of both front-ends.
pub const FRAME_RATE_HZ: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sod(SodMode),
    Ttfs,
    Lif,
    Bsa,
}

impl Family {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "sod" => Family::Sod(SodMode::Full),
            "sod-on" => Family::Sod(SodMode::OnOnly),
            "sod-off" => Family::Sod(SodMode::OffOnly),
            "ttfs" => Family::Ttfs,
            "lif" => Family::Lif,
            "bsa" => Family::Bsa,
            other => {
                return Err(usage(format!(
                    "unknown encoder {other:?} (expected sod, sod-on, sod-off, ttfs, lif or bsa)"
                )))
            }
        })
    }

    fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Family::Sod(_) | Family::Ttfs => &["delta"],
            Family::Lif => &["delta", "tau_min_ms", "tau_max_ms"],
            Family::Bsa => &["threshold", "cutoff_hz", "filter_len"],
        }
    }
}

/// Parses `--params` values; each may hold several comma-separated pairs.
pub fn parse_pairs(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        for pair in item.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| usage(format!("parameter {pair:?} is not key=value")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| usage(format!("parameter {k}: {v:?} is not a number")))?;
            out.insert(k.trim().to_string(), value);
        }
    }
    Ok(out)
}

/// BSA parameter file as written by `bsa-optimize`.
#[derive(Debug, Clone, PartialEq)]
pub struct BsaParams {
    pub filter_taps: Vec<f64>,
    pub threshold: f64,
}

pub fn format_bsa_params(choice: &BsaChoice, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "encoder=bsa");
    let _ = writeln!(out, "cutoff_hz={:?}", choice.cutoff_hz);
    let _ = writeln!(out, "filter_len={}", choice.filter_len);
    let _ = writeln!(out, "threshold={:?}", choice.threshold);
    let _ = writeln!(out, "snr_db={:?}", choice.snr_db);
    let _ = writeln!(out, "seed={seed}");
    let taps: Vec<String> = choice.filter_taps.iter().map(|t| format!("{t:?}")).collect();
    let _ = writeln!(out, "filter_taps={}", taps.join(","));
    out
}

pub fn read_bsa_params(path: &Path) -> Result<BsaParams> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read BSA parameters {}", path.display()))?;
    let bad = |what: &str| usage(format!("{}: {what}", path.display()));
    let mut taps = None;
    let mut threshold = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value lines"))?;
        match k.trim() {
            "filter_taps" => {
                taps = Some(
                    v.split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("unreadable filter_taps"))?,
                )
            }
            "threshold" => threshold = Some(v.trim().parse::<f64>().map_err(|_| bad("unreadable threshold"))?),
            _ => {}
        }
    }
    Ok(BsaParams {
        filter_taps: taps.ok_or_else(|| bad("missing filter_taps"))?,
        threshold: threshold.ok_or_else(|| bad("missing threshold"))?,
    })
}

fn check_keys(family: Family, pairs: &BTreeMap<String, f64>) -> Result<()> {
    let allowed = family.allowed_keys();
    if let Some(k) = pairs.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(usage(format!("parameter {k:?} does not apply (allowed: {})", allowed.join(", "))));
    }
    Ok(())
}

fn tau_map(pairs: &BTreeMap<String, f64>) -> Result<LifTauMap> {
    let default = LifTauMap::default();
    let map = LifTauMap {
        tau_min_s: pairs.get("tau_min_ms").map_or(default.tau_min_s, |v| v / 1000.0),
        tau_max_s: pairs.get("tau_max_ms").map_or(default.tau_max_s, |v| v / 1000.0),
    };
    map.validate().map_err(|e| usage(e.to_string()))?;
    Ok(map)
}

/// Taps from a parameter file, else designed from `cutoff_hz`/`filter_len`.
fn bsa_taps(pairs: &BTreeMap<String, f64>, file: Option<&BsaParams>) -> Result<Vec<f64>> {
    if let Some(f) = file {
        if pairs.contains_key("cutoff_hz") || pairs.contains_key("filter_len") {
            return Err(usage("give either a BSA parameter file or cutoff_hz/filter_len, not both"));
        }
        return Ok(f.filter_taps.clone());
    }
    let (Some(&cutoff), Some(&len)) = (pairs.get("cutoff_hz"), pairs.get("filter_len")) else {
        return Err(usage("BSA needs --bsa-params FILE or cutoff_hz and filter_len"));
    };
    if len < 1.0 || len.fract() != 0.0 {
        return Err(usage(format!("filter_len must be a positive integer, got {len}")));
    }
    bsa_filter(cutoff, len as usize, FRAME_RATE_HZ).map_err(|e| usage(e.to_string()))
}

/// Complete parameters for a single encode run.
pub fn encoder_params(name: &str, items: &[String], bsa_file: Option<&Path>) -> Result<EncoderParams> {
    let family = Family::parse(name)?;
    let pairs = parse_pairs(items)?;
    check_keys(family, &pairs)?;
    let file = bsa_file.map(read_bsa_params).transpose()?;
    let need = |key: &str| {
        pairs
            .get(key)
            .copied()
            .ok_or_else(|| usage(format!("missing parameter {key} for encoder {name}")))
    };
    let params = match family {
        Family::Sod(mode) => EncoderParams::Sod { delta: need("delta")?, mode },
        Family::Ttfs => EncoderParams::Ttfs { delta: need("delta")? },
        Family::Lif => EncoderParams::Lif {
            delta: need("delta")?,
            taus: LifTaus::FrequencyMap(tau_map(&pairs)?),
        },
        Family::Bsa => EncoderParams::Bsa {
            filter_taps: bsa_taps(&pairs, file.as_ref())?,
            threshold: match (pairs.get("threshold"), &file) {
                (Some(&t), _) => t,
                (None, Some(f)) => f.threshold,
                (None, None) => need("threshold")?,
            },
        },
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

/// Encoder family for a sweep; the swept value is the threshold.
pub fn sweep_kind(name: &str, items: &[String], bsa_file: Option<&Path>) -> Result<EncoderKind> {
    let family = Family::parse(name)?;
    let pairs = parse_pairs(items)?;
    check_keys(family, &pairs)?;
    if pairs.contains_key("delta") || pairs.contains_key("threshold") {
        return Err(usage("the threshold comes from --grid; do not pass it in --params"));
    }
    let file = bsa_file.map(read_bsa_params).transpose()?;
    Ok(match family {
        Family::Sod(mode) => EncoderKind::Sod(mode),
        Family::Ttfs => EncoderKind::Ttfs,
        Family::Lif => EncoderKind::Lif(tau_map(&pairs)?),
        Family::Bsa => EncoderKind::Bsa {
            filter_taps: bsa_taps(&pairs, file.as_ref())?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_each_family() {
        let p = encoder_params("sod-on", &["delta=0.1".into()], None).unwrap();
        assert_eq!(p, EncoderParams::Sod { delta: 0.1, mode: SodMode::OnOnly });
        let p = encoder_params("lif", &["delta=0.01,tau_min_ms=25".into()], None).unwrap();
        let EncoderParams::Lif { taus: LifTaus::FrequencyMap(m), .. } = p else { panic!() };
        assert_eq!((m.tau_min_s, m.tau_max_s), (0.025, 0.040));
        let p = encoder_params("bsa", &["threshold=0.01".into(), "cutoff_hz=50,filter_len=11".into()], None).unwrap();
        assert_eq!(p.name(), "bsa");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(encoder_params("sod", &[], None).is_err());
        assert!(encoder_params("sod", &["delta=0".into()], None).is_err());
        assert!(encoder_params("ttfs", &["delta=0.1,tau_min_ms=3".into()], None).is_err());
        assert!(encoder_params("xyz", &["delta=0.1".into()], None).is_err());
        assert!(sweep_kind("sod", &["delta=0.1".into()], None).is_err());
    }

    #[test]
    fn bsa_params_file_round_trip() {
        let choice = BsaChoice {
            cutoff_hz: 50.0,
            filter_len: 3,
            filter_taps: vec![0.1, 0.7000000000000001, 0.2],
            threshold: 0.05,
            snr_db: 12.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bsa.params");
        std::fs::write(&path, format_bsa_params(&choice, 3)).unwrap();
        let read = read_bsa_params(&path).unwrap();
        assert_eq!(read.filter_taps, choice.filter_taps);
        assert_eq!(read.threshold, 0.05);
        let p = encoder_params("bsa", &[], Some(&path)).unwrap();
        assert_eq!(p, EncoderParams::Bsa { filter_taps: choice.filter_taps.clone(), threshold: 0.05 });
        let p = encoder_params("bsa", &["threshold=0.2".into()], Some(&path)).unwrap();
        assert_eq!(p, EncoderParams::Bsa { filter_taps: choice.filter_taps, threshold: 0.2 });
    }
}
