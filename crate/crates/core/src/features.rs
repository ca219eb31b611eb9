//! Time-frequency front-ends: a short-time Fourier magnitude spectrogram and
//! a gammatone cochleagram. Both end at 24 channels sampled at 1 kHz for
//! 20 kHz input under the default configurations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dsp::{self, LowpassWindow};
use crate::error::{Error, Result};
use crate::normalize::{normalize, Normalized};
use crate::types::{AudioSignal, TfKind, TfRepresentation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrogramConfig {
    pub window_ms: f64,
    pub hop_ms: f64,
    pub tukey_alpha: f64,
    pub num_bins_kept: usize,
    pub post_downsample: usize,
}

impl Default for SpectrogramConfig {
    fn default() -> Self {
        Self {
            window_ms: 5.0,
            hop_ms: 0.5,
            tukey_alpha: 0.25,
            num_bins_kept: 24,
            post_downsample: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CochleagramConfig {
    pub num_filters: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub filter_order: usize,
    pub env_downsample: usize,
    pub lateral_alpha: f64,
    pub post_downsample: usize,
}

impl Default for CochleagramConfig {
    fn default() -> Self {
        Self {
            num_filters: 24,
            fmin_hz: 100.0,
            fmax_hz: 4500.0,
            filter_order: 4,
            env_downsample: 10,
            lateral_alpha: 0.25,
            post_downsample: 2,
        }
    }
}

impl CochleagramConfig {
    pub fn center_freqs_hz(&self) -> Vec<f64> {
        dsp::erb_space(self.fmin_hz, self.fmax_hz, self.num_filters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frontend {
    Spectrogram,
    Cochleagram,
}

impl fmt::Display for Frontend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frontend::Spectrogram => "spectrogram",
            Frontend::Cochleagram => "cochleagram",
        })
    }
}

impl FromStr for Frontend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spectrogram" | "stft" => Ok(Frontend::Spectrogram),
            "cochleagram" | "cochlea" => Ok(Frontend::Cochleagram),
            other => Err(Error::InvalidParameter(format!("unknown frontend {other:?}"))),
        }
    }
}

fn samples_for_ms(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

/// Magnitude STFT keeping the lowest `num_bins_kept` bins of a transform the
/// length of the window, then every `post_downsample`-th frame from frame 0.
pub fn spectrogram(signal: &AudioSignal, cfg: &SpectrogramConfig) -> Result<TfRepresentation> {
    let fs = signal.sample_rate_hz();
    let win = samples_for_ms(cfg.window_ms, fs);
    let hop = samples_for_ms(cfg.hop_ms, fs);
    if !(hop > 0 && win > hop) {
        return Err(Error::InvalidParameter(format!(
            "need window > hop > 0 samples, got window {win}, hop {hop}"
        )));
    }
    if cfg.num_bins_kept == 0 || cfg.num_bins_kept > win / 2 + 1 {
        return Err(Error::InvalidParameter(format!(
            "num_bins_kept must be in 1..={}, got {}",
            win / 2 + 1,
            cfg.num_bins_kept
        )));
    }
    if cfg.post_downsample == 0 {
        return Err(Error::InvalidParameter("post_downsample must be >= 1".into()));
    }
    let x = signal.samples();
    if x.len() < win {
        return Err(Error::SignalTooShort {
            samples: x.len(),
            required: win,
        });
    }

    let raw_frames = (x.len() - win) / hop + 1;
    let kept: Vec<usize> = (0..raw_frames).step_by(cfg.post_downsample).collect();
    let bins = cfg.num_bins_kept;
    let window = dsp::tukey(win, cfg.tukey_alpha);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win);

    let mut values = vec![0.0; bins * kept.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); win];
    for (col, &frame) in kept.iter().enumerate() {
        let start = frame * hop;
        for (b, (&s, &w)) in buf.iter_mut().zip(x[start..start + win].iter().zip(&window)) {
            *b = Complex64::new(s * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, z) in buf.iter().take(bins).enumerate() {
            values[k * kept.len() + col] = z.norm();
        }
    }

    let bin_hz = fs / win as f64;
    TfRepresentation::new(
        values,
        bins,
        kept.len(),
        fs / hop as f64 / cfg.post_downsample as f64,
        (0..bins).map(|k| k as f64 * bin_hz).collect(),
        TfKind::Spectrogram,
    )
}

/// One complex gammatone channel realized as a cascade of identical complex
/// one-pole sections, gain-normalized to unity at the center frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammatoneFilter {
    pub center_hz: f64,
    pub order: usize,
    pole: Complex64,
    stage_gain: f64,
}

impl GammatoneFilter {
    pub fn new(center_hz: f64, order: usize, sample_rate_hz: f64) -> Self {
        let bandwidth = 1.019 * dsp::erb_hz(center_hz);
        let radius = (-2.0 * PI * bandwidth / sample_rate_hz).exp();
        let theta = 2.0 * PI * center_hz / sample_rate_hz;
        Self {
            center_hz,
            order,
            pole: Complex64::from_polar(radius, theta),
            stage_gain: 1.0 - radius,
        }
    }

    pub fn pole(&self) -> Complex64 {
        self.pole
    }

    pub fn stage_gain(&self) -> f64 {
        self.stage_gain
    }

    /// Real band-pass output, `2 Re(y)` of the complex cascade.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut state = vec![Complex64::new(0.0, 0.0); self.order];
        x.iter()
            .map(|&s| {
                let mut v = Complex64::new(s, 0.0);
                for z in state.iter_mut() {
                    *z = v * self.stage_gain + self.pole * *z;
                    v = *z;
                }
                2.0 * v.re
            })
            .collect()
    }
}

/// Anti-aliased decimation: zero-phase FIR low-pass evaluated only at the
/// retained samples `0, factor, 2*factor, ...`.
fn decimate(x: &[f64], factor: usize, taps: &[f64]) -> Vec<f64> {
    if factor == 1 {
        return x.to_vec();
    }
    let half = (taps.len() / 2) as isize;
    let n = x.len() as isize;
    (0..x.len())
        .step_by(factor)
        .map(|i| {
            let i = i as isize;
            let mut acc = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                let j = i + half - k as isize;
                if (0..n).contains(&j) {
                    acc += h * x[j as usize];
                }
            }
            acc
        })
        .collect()
}

/// Gammatone filterbank -> analytic envelope -> decimation -> square root ->
/// lateral inhibition -> half-wave rectification -> frame downsampling.
pub fn cochleagram(signal: &AudioSignal, cfg: &CochleagramConfig) -> Result<TfRepresentation> {
    if cfg.num_filters < 2 {
        return Err(Error::InvalidParameter("need at least 2 cochlear filters".into()));
    }
    if !(cfg.fmin_hz > 0.0 && cfg.fmin_hz < cfg.fmax_hz) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < fmin < fmax, got [{}, {}]",
            cfg.fmin_hz, cfg.fmax_hz
        )));
    }
    if cfg.filter_order == 0 || cfg.env_downsample == 0 || cfg.post_downsample == 0 {
        return Err(Error::InvalidParameter(
            "filter order and downsampling factors must be >= 1".into(),
        ));
    }
    let fs = signal.sample_rate_hz();
    if cfg.fmax_hz >= fs / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "fmax {} Hz is above Nyquist for {fs} Hz",
            cfg.fmax_hz
        )));
    }
    let x = signal.samples();
    let required = (0.010 * fs).ceil() as usize;
    if x.len() < required.max(1) {
        return Err(Error::SignalTooShort {
            samples: x.len(),
            required,
        });
    }

    let centers = cfg.center_freqs_hz();
    let d = cfg.env_downsample;
    // Passband edge at 80 % of the decimated Nyquist rate.
    let aa_taps = dsp::windowed_sinc_lowpass(8 * d + 1, 0.8 * 0.5 / d as f64, LowpassWindow::Hamming);
    let mut planner = FftPlanner::new();

    let compressed: Vec<Vec<f64>> = centers
        .iter()
        .map(|&fc| {
            let band = GammatoneFilter::new(fc, cfg.filter_order, fs).filter(x);
            let env = dsp::analytic_envelope(&band, &mut planner);
            decimate(&env, d, &aa_taps)
                .into_iter()
                // the low-pass can undershoot slightly below zero
                .map(|v| v.max(0.0).sqrt())
                .collect()
        })
        .collect();

    let frames = compressed[0].len();
    let kept: Vec<usize> = (0..frames).step_by(cfg.post_downsample).collect();
    let c = cfg.num_filters;
    let mut values = vec![0.0; c * kept.len()];
    for (col, &t) in kept.iter().enumerate() {
        for i in 0..c {
            let below = compressed[i.saturating_sub(1)][t];
            let above = compressed[(i + 1).min(c - 1)][t];
            let v = compressed[i][t] - cfg.lateral_alpha * (below + above);
            values[i * kept.len() + col] = v.max(0.0);
        }
    }

    TfRepresentation::new(
        values,
        c,
        kept.len(),
        fs / d as f64 / cfg.post_downsample as f64,
        centers,
        TfKind::Cochleagram,
    )
}

/// Front-end with default configuration followed by global normalization.
pub fn extract(signal: &AudioSignal, frontend: Frontend) -> Result<Normalized> {
    let tf = match frontend {
        Frontend::Spectrogram => spectrogram(signal, &SpectrogramConfig::default())?,
        Frontend::Cochleagram => cochleagram(signal, &CochleagramConfig::default())?,
    };
    normalize(&tf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, secs: f64) -> AudioSignal {
        let fs = 20_000.0;
        let n = (secs * fs) as usize;
        AudioSignal::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect(),
            fs,
        )
        .unwrap()
    }

    #[test]
    fn spectrogram_frame_arithmetic() {
        let s = spectrogram(&tone(300.0, 1.0), &SpectrogramConfig::default()).unwrap();
        assert_eq!((s.num_channels(), s.num_frames()), (24, 996));
        assert_eq!(s.frame_rate_hz(), 1000.0);
        assert_eq!(s.center_freqs_hz()[1], 200.0);
        assert_eq!(s.center_freqs_hz()[23], 4600.0);
    }

    #[test]
    fn spectrogram_rejects_short_signal() {
        let sig = AudioSignal::new(vec![0.0; 99], 20_000.0).unwrap();
        assert!(matches!(
            spectrogram(&sig, &SpectrogramConfig::default()),
            Err(Error::SignalTooShort { samples: 99, required: 100 })
        ));
        // exactly one window is enough
        let sig = AudioSignal::new(vec![0.0; 100], 20_000.0).unwrap();
        assert_eq!(spectrogram(&sig, &SpectrogramConfig::default()).unwrap().num_frames(), 1);
    }

    #[test]
    fn dc_energy_lands_in_bin_zero() {
        let sig = AudioSignal::new(vec![0.5; 2000], 20_000.0).unwrap();
        let rect = SpectrogramConfig {
            tukey_alpha: 0.0,
            ..Default::default()
        };
        let s = spectrogram(&sig, &rect).unwrap();
        for t in 0..s.num_frames() {
            assert!((s.get(0, t) - 50.0).abs() < 1e-9);
            for k in 1..24 {
                assert!(s.get(k, t) < 1e-10, "bin {k} frame {t}: {}", s.get(k, t));
            }
        }
        // the default taper leaks into the first few bins but bin 0 dominates
        let s = spectrogram(&sig, &SpectrogramConfig::default()).unwrap();
        for t in 0..s.num_frames() {
            for k in 1..24 {
                assert!(s.get(k, t) < 0.2 * s.get(0, t));
            }
        }
    }

    #[test]
    fn cochleagram_shape_and_silence() {
        let c = cochleagram(&tone(1000.0, 1.0), &CochleagramConfig::default()).unwrap();
        assert_eq!((c.num_channels(), c.num_frames()), (24, 1000));
        assert_eq!(c.frame_rate_hz(), 1000.0);
        assert!(c.values().iter().all(|v| v.is_finite() && *v >= 0.0));

        let silent = AudioSignal::new(vec![0.0; 20_000], 20_000.0).unwrap();
        let c = cochleagram(&silent, &CochleagramConfig::default()).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
        let n = extract(&silent, Frontend::Cochleagram).unwrap();
        assert!(n.silent);
    }

    #[test]
    fn cochleagram_rejects_short_signal() {
        let sig = AudioSignal::new(vec![0.1; 199], 20_000.0).unwrap();
        assert!(matches!(
            cochleagram(&sig, &CochleagramConfig::default()),
            Err(Error::SignalTooShort { .. })
        ));
    }

    #[test]
    fn gammatone_has_unit_gain_at_center() {
        let f = GammatoneFilter::new(1000.0, 4, 20_000.0);
        let y = f.filter(&tone(1000.0, 0.5).samples().to_vec());
        let peak = y[5000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 1.0).abs() < 0.02, "peak {peak}");
    }

    #[test]
    fn frontend_parses() {
        assert_eq!("Cochleagram".parse::<Frontend>().unwrap(), Frontend::Cochleagram);
        assert!("mfcc".parse::<Frontend>().is_err());
    }
}
