//! Parameter sweeps: encode a corpus at each grid value and tabulate mean
//! density, reconstruction SNR and bit-compression ratios.

use std::fmt;
use std::str::FromStr;

use crate::codec::{decode_bsa, decode_spikes};
use crate::encoders::encode;
use crate::error::{Error, Result};
use crate::features::Frontend;
use crate::metrics::{aggregate, fmt_sig6, MetricsReport};
use crate::types::{EncoderParams, LifTauMap, LifTaus, SodMode, SpikeTrainSet, TfRepresentation};

/// Encoder family with everything but the swept threshold fixed.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderKind {
    Sod(SodMode),
    Ttfs,
    Lif(LifTauMap),
    /// Sweeps the BSA threshold with a fixed filter.
    Bsa { filter_taps: Vec<f64> },
}

impl EncoderKind {
    pub fn with_threshold(&self, value: f64) -> EncoderParams {
        match self {
            EncoderKind::Sod(mode) => EncoderParams::Sod {
                delta: value,
                mode: *mode,
            },
            EncoderKind::Ttfs => EncoderParams::Ttfs { delta: value },
            EncoderKind::Lif(map) => EncoderParams::Lif {
                delta: value,
                taus: LifTaus::FrequencyMap(*map),
            },
            EncoderKind::Bsa { filter_taps } => EncoderParams::Bsa {
                filter_taps: filter_taps.clone(),
                threshold: value,
            },
        }
    }
}

/// Reconstruction used for SNR scoring: the BSA linear filter for BSA, the
/// moving-average decoder otherwise. `None` when the decoded shape differs
/// from the source (full SOD keeps ON and OFF trains apart).
pub fn reconstruct(spikes: &SpikeTrainSet, params: &EncoderParams) -> Result<Option<TfRepresentation>> {
    let decoded = match params {
        EncoderParams::Bsa { filter_taps, .. } => decode_bsa(spikes, filter_taps)?,
        _ => decode_spikes(spikes),
    };
    Ok((decoded.num_channels() == spikes.source_channels).then_some(decoded))
}

/// Encodes one normalized utterance and measures it.
pub fn evaluate(
    tf: &TfRepresentation,
    params: &EncoderParams,
    frontend: Frontend,
) -> Result<(SpikeTrainSet, MetricsReport)> {
    let spikes = encode(tf, params)?;
    let recon = reconstruct(&spikes, params)?;
    let report = MetricsReport::measure(&spikes, params, frontend, recon.as_ref().map(|r| (tf, r)))?;
    Ok((spikes, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub density: f64,
    pub snr_db: Option<f64>,
    pub bcr_raw: f64,
    pub bcr_mfcc: f64,
}

impl SweepRow {
    pub fn from_reports(param: f64, reports: &[MetricsReport]) -> Result<Self> {
        let agg = aggregate(reports)?;
        Ok(Self {
            param,
            density: agg.spike_density,
            snr_db: agg.snr_db,
            bcr_raw: agg.bcr_raw,
            bcr_mfcc: agg.bcr_mfcc,
        })
    }
}

pub const TABLE_HEADER: &str = "param,density,snr_db,bcr_raw,bcr_mfcc";

/// Comma-delimited table with a fixed header; values at 6 significant digits.
pub fn format_table(rows: &[SweepRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_sig6(r.param),
            fmt_sig6(r.density),
            r.snr_db.map(fmt_sig6).unwrap_or_default(),
            fmt_sig6(r.bcr_raw),
            fmt_sig6(r.bcr_mfcc),
        ));
    }
    out
}

/// Sequential sweep over a corpus of normalized representations.
pub fn run_sweep(
    corpus: &[TfRepresentation],
    kind: &EncoderKind,
    grid: &[f64],
    frontend: Frontend,
) -> Result<Vec<SweepRow>> {
    if corpus.is_empty() {
        return Err(Error::Empty("sweep corpus"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    grid.iter()
        .map(|&value| {
            let params = kind.with_threshold(value);
            let reports = corpus
                .iter()
                .map(|tf| evaluate(tf, &params, frontend).map(|(_, r)| r))
                .collect::<Result<Vec<_>>>()?;
            SweepRow::from_reports(value, &reports)
        })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Grid specification: `log:LO:HI:N`, `lin:LO:HI:N`, or a comma list.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec(pub Vec<f64>);

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse grid {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let values = if let Some(rest) = s.strip_prefix("log:").or_else(|| s.strip_prefix("lin:")) {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let (lo, hi) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            if s.starts_with("log:") {
                if !(lo > 0.0 && hi > 0.0) {
                    return Err(bad());
                }
                log_grid(lo, hi, n)
            } else {
                lin_grid(lo, hi, n)
            }
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(GridSpec(values))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v:?}")).collect();
        f.write_str(&parts.join(","))
    }
}
