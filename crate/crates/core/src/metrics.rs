//! Spike density, reconstruction SNR and bit-compression ratio.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::Frontend;
use crate::types::{EncoderParams, LifTaus, SpikeTrainSet, TfRepresentation};

/// Reported SNR when reconstruction is exact.
pub const SNR_CAP_DB: f64 = 300.0;

/// Bits per AER word.
pub const AER_BITS_PER_SPIKE: f64 = 16.0;
/// 20 kHz x 32-bit samples.
pub const RAW_PCM_BITS_PER_S: f64 = 640_000.0;
/// 32 coefficients of 32 bits every 5 ms.
pub const MFCC_BITS_PER_S: f64 = 204_800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Baseline {
    RawPcm,
    Mfcc,
}

impl Baseline {
    pub fn bits_per_second(self) -> f64 {
        match self {
            Baseline::RawPcm => RAW_PCM_BITS_PER_S,
            Baseline::Mfcc => MFCC_BITS_PER_S,
        }
    }
}

/// Spikes per sample of the source representation. The denominator is the
/// source channel count even when ON and OFF trains are kept separately.
pub fn spike_density(s: &SpikeTrainSet) -> Result<f64> {
    if s.source_frames == 0 || s.source_channels == 0 {
        return Err(Error::ZeroFrames);
    }
    Ok(s.events.len() as f64 / (s.source_channels * s.source_frames) as f64)
}

/// `10 log10(sum y^2 / sum (y - y_hat)^2)`, capped at [`SNR_CAP_DB`].
pub fn snr(original: &TfRepresentation, reconstruction: &TfRepresentation) -> Result<f64> {
    if original.num_channels() != reconstruction.num_channels()
        || original.num_frames() != reconstruction.num_frames()
    {
        return Err(Error::ShapeMismatch {
            left_channels: original.num_channels(),
            left_frames: original.num_frames(),
            right_channels: reconstruction.num_channels(),
            right_frames: reconstruction.num_frames(),
        });
    }
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (&y, &r) in original.values().iter().zip(reconstruction.values()) {
        signal += y * y;
        noise += (y - r) * (y - r);
    }
    if signal == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).min(SNR_CAP_DB))
}

/// Encoded AER bits over baseline bits for the same duration.
pub fn bit_compression_ratio(s: &SpikeTrainSet, duration_s: f64, baseline: Baseline) -> Result<f64> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let encoded = AER_BITS_PER_SPIKE * s.events.len() as f64;
    Ok(encoded / (baseline.bits_per_second() * duration_s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub spike_density: f64,
    pub snr_db: Option<f64>,
    pub bcr_raw: f64,
    pub bcr_mfcc: f64,
    pub encoder: EncoderParams,
    pub frontend: Frontend,
    pub num_utterances: usize,
}

impl MetricsReport {
    /// Single-utterance report. `reconstruction` is compared with `original`
    /// when given; silent originals leave `snr_db` empty.
    pub fn measure(
        spikes: &SpikeTrainSet,
        encoder: &EncoderParams,
        frontend: Frontend,
        original: Option<(&TfRepresentation, &TfRepresentation)>,
    ) -> Result<Self> {
        let duration = spikes.duration_s();
        let snr_db = match original {
            Some((y, r)) => match snr(y, r) {
                Ok(v) => Some(v),
                Err(Error::ZeroEnergy) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        Ok(Self {
            spike_density: spike_density(spikes)?,
            snr_db,
            bcr_raw: bit_compression_ratio(spikes, duration, Baseline::RawPcm)?,
            bcr_mfcc: bit_compression_ratio(spikes, duration, Baseline::Mfcc)?,
            encoder: encoder.clone(),
            frontend,
            num_utterances: 1,
        })
    }

    /// Flat `key=value` record, one field per line.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "encoder={}", self.encoder.name());
        match &self.encoder {
            EncoderParams::Sod { delta, .. } | EncoderParams::Ttfs { delta } => {
                let _ = writeln!(out, "delta={delta:?}");
            }
            EncoderParams::Lif { delta, taus } => {
                let _ = writeln!(out, "delta={delta:?}");
                match taus {
                    LifTaus::FrequencyMap(m) => {
                        let _ = writeln!(out, "tau_min_s={:?}", m.tau_min_s);
                        let _ = writeln!(out, "tau_max_s={:?}", m.tau_max_s);
                    }
                    LifTaus::Explicit(t) => {
                        let _ = writeln!(out, "tau_s={}", join(t));
                    }
                }
            }
            EncoderParams::Bsa {
                filter_taps,
                threshold,
            } => {
                let _ = writeln!(out, "threshold={threshold:?}");
                let _ = writeln!(out, "filter_taps={}", join(filter_taps));
            }
        }
        let _ = writeln!(out, "frontend={}", self.frontend);
        let _ = writeln!(out, "num_utterances={}", self.num_utterances);
        let _ = writeln!(out, "spike_density={}", fmt_sig6(self.spike_density));
        let _ = writeln!(
            out,
            "snr_db={}",
            self.snr_db.map(fmt_sig6).unwrap_or_default()
        );
        let _ = writeln!(out, "bcr_raw={}", fmt_sig6(self.bcr_raw));
        let _ = writeln!(out, "bcr_mfcc={}", fmt_sig6(self.bcr_mfcc));
        out
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

/// Unweighted mean over reports sharing one encoder and front-end, taken in
/// index order. The SNR mean covers the reports that carry one.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    let first = reports.first().ok_or(Error::Empty("metrics reports"))?;
    if let Some(r) = reports
        .iter()
        .find(|r| r.encoder != first.encoder || r.frontend != first.frontend)
    {
        return Err(Error::MixedConfigurations(format!(
            "{}/{} vs {}/{}",
            first.encoder.name(),
            first.frontend,
            r.encoder.name(),
            r.frontend
        )));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let snrs: Vec<f64> = reports.iter().filter_map(|r| r.snr_db).collect();
    Ok(MetricsReport {
        spike_density: mean(|r| r.spike_density),
        snr_db: (!snrs.is_empty()).then(|| snrs.iter().sum::<f64>() / snrs.len() as f64),
        bcr_raw: mean(|r| r.bcr_raw),
        bcr_mfcc: mean(|r| r.bcr_mfcc),
        encoder: first.encoder.clone(),
        frontend: first.frontend,
        num_utterances: reports.iter().map(|r| r.num_utterances).sum(),
    })
}

/// Formats with 6 significant digits in the style of C's `%.6g`.
pub fn fmt_sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
