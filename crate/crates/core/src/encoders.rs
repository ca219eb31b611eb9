//! Spike encoders operating channel by channel on a normalized representation.
//!
//! Every encoder returns a [`SpikeTrainSet`] in canonical `(time, channel)`
//! order. Event times are `frame / frame_rate_hz` except for TTFS, whose
//! times are continuous within the frame interval.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::decode_bsa;
use crate::dsp::{self, LowpassWindow};
use crate::error::{Error, Result};
use crate::metrics::snr;
use crate::types::{
    ChannelLayout, EncoderParams, LifTauMap, LifTaus, Polarity, SodMode, SpikeEvent,
    SpikeTrainSet, TfRepresentation,
};

fn frame_time(frame: usize, frame_rate_hz: f64) -> f64 {
    frame as f64 / frame_rate_hz
}

/// Send-on-delta over one channel. Returns `(on_frames, off_frames)`.
///
/// The reference is the amplitude at the last spike frame, starting at
/// frame 0; an increase of at least `delta` is an ON spike, a decrease of at
/// least `delta` an OFF spike, and either moves the reference.
pub fn sod_channel(y: &[f64], delta: f64) -> (Vec<usize>, Vec<usize>) {
    let mut on = Vec::new();
    let mut off = Vec::new();
    let mut t_ref = 0;
    for t in 0..y.len() {
        if y[t] - y[t_ref] >= delta {
            on.push(t);
            t_ref = t;
        } else if y[t_ref] - y[t] >= delta {
            off.push(t);
            t_ref = t;
        }
    }
    (on, off)
}

pub fn encode_sod(tf: &TfRepresentation, delta: f64, mode: SodMode) -> Result<SpikeTrainSet> {
    EncoderParams::Sod { delta, mode }.validate()?;
    let c = tf.num_channels();
    let fr = tf.frame_rate_hz();
    let mut events = Vec::new();
    for (i, y) in tf.channels().enumerate() {
        let (on, off) = sod_channel(y, delta);
        if mode != SodMode::OffOnly {
            events.extend(on.into_iter().map(|t| SpikeEvent::new(i, Polarity::On, frame_time(t, fr))));
        }
        match mode {
            SodMode::Full => events.extend(
                off.into_iter()
                    .map(|t| SpikeEvent::new(i + c, Polarity::Off, frame_time(t, fr))),
            ),
            SodMode::OffOnly => events.extend(
                off.into_iter()
                    .map(|t| SpikeEvent::new(i, Polarity::Off, frame_time(t, fr))),
            ),
            SodMode::OnOnly => {}
        }
    }
    Ok(SpikeTrainSet::from_unsorted(
        events,
        mode.layout(),
        c,
        tf.num_frames(),
        fr,
    ))
}

/// Time-to-first-spike with a logarithmic latency inside each frame:
/// a sample `y >= delta` at frame `n` fires at `(n + ln y / ln delta) / fs`.
pub fn encode_ttfs(tf: &TfRepresentation, delta: f64) -> Result<SpikeTrainSet> {
    EncoderParams::Ttfs { delta }.validate()?;
    let fr = tf.frame_rate_hz();
    let log_delta = delta.ln();
    let mut events = Vec::new();
    for (i, y) in tf.channels().enumerate() {
        for (n, &v) in y.iter().enumerate() {
            if v >= delta {
                let shift = v.ln() / log_delta;
                events.push(SpikeEvent::new(i, Polarity::Unipolar, (n as f64 + shift) / fr));
            }
        }
    }
    Ok(SpikeTrainSet::from_unsorted(
        events,
        ChannelLayout::Unipolar,
        tf.num_channels(),
        tf.num_frames(),
        fr,
    ))
}

/// Forward-Euler LIF over one channel with reset to zero.
///
/// `V[0] = 0` and `V[n] = V[n-1] + (dt / tau) (I[n-1] - V[n-1])`; frame `n`
/// spikes when `V[n] >= delta`.
pub fn lif_channel(input: &[f64], delta: f64, tau_s: f64, dt_s: f64) -> Vec<usize> {
    let k = dt_s / tau_s;
    let mut v = 0.0;
    let mut spikes = Vec::new();
    for n in 1..input.len() {
        v += k * (input[n - 1] - v);
        if v >= delta {
            spikes.push(n);
            v = 0.0;
        }
    }
    spikes
}

pub fn encode_lif(tf: &TfRepresentation, delta: f64, taus: &LifTaus) -> Result<SpikeTrainSet> {
    EncoderParams::Lif {
        delta,
        taus: taus.clone(),
    }
    .validate()?;
    let tau_s = taus.resolve(tf.center_freqs_hz())?;
    let fr = tf.frame_rate_hz();
    let dt = 1.0 / fr;
    if let Some(t) = tau_s.iter().find(|&&t| dt / t > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "time constant {t} s is shorter than the frame period {dt} s"
        )));
    }
    let mut events = Vec::new();
    for (i, y) in tf.channels().enumerate() {
        events.extend(
            lif_channel(y, delta, tau_s[i], dt)
                .into_iter()
                .map(|n| SpikeEvent::new(i, Polarity::Unipolar, frame_time(n, fr))),
        );
    }
    Ok(SpikeTrainSet::from_unsorted(
        events,
        ChannelLayout::Unipolar,
        tf.num_channels(),
        tf.num_frames(),
        fr,
    ))
}

/// Convenience wrapper using the reciprocal-frequency tau map.
pub fn encode_lif_mapped(tf: &TfRepresentation, delta: f64, map: LifTauMap) -> Result<SpikeTrainSet> {
    encode_lif(tf, delta, &LifTaus::FrequencyMap(map))
}

/// Ben's spiker algorithm over one channel.
///
/// Works on a copy `r` of the input. At frame `t` it compares the L1 error of
/// subtracting the filter against leaving the signal alone (both truncated at
/// the end of the signal) and fires when `e1 <= e2 - threshold`, subtracting
/// the filter in place. No clamping: `r` may go negative.
pub fn bsa_channel(y: &[f64], taps: &[f64], threshold: f64) -> Vec<usize> {
    let mut r = y.to_vec();
    let n = r.len();
    let mut spikes = Vec::new();
    for t in 0..n {
        let span = taps.len().min(n - t);
        let mut e1 = 0.0;
        let mut e2 = 0.0;
        for k in 0..span {
            e1 += (r[t + k] - taps[k]).abs();
            e2 += r[t + k].abs();
        }
        if e1 <= e2 - threshold {
            spikes.push(t);
            for k in 0..span {
                r[t + k] -= taps[k];
            }
        }
    }
    spikes
}

pub fn encode_bsa(tf: &TfRepresentation, filter_taps: &[f64], threshold: f64) -> Result<SpikeTrainSet> {
    EncoderParams::Bsa {
        filter_taps: filter_taps.to_vec(),
        threshold,
    }
    .validate()?;
    let fr = tf.frame_rate_hz();
    let mut events = Vec::new();
    for (i, y) in tf.channels().enumerate() {
        events.extend(
            bsa_channel(y, filter_taps, threshold)
                .into_iter()
                .map(|t| SpikeEvent::new(i, Polarity::Unipolar, frame_time(t, fr))),
        );
    }
    Ok(SpikeTrainSet::from_unsorted(
        events,
        ChannelLayout::Unipolar,
        tf.num_channels(),
        tf.num_frames(),
        fr,
    ))
}

/// Dispatches on the parameter variant.
pub fn encode(tf: &TfRepresentation, params: &EncoderParams) -> Result<SpikeTrainSet> {
    match params {
        EncoderParams::Sod { delta, mode } => encode_sod(tf, *delta, *mode),
        EncoderParams::Ttfs { delta } => encode_ttfs(tf, *delta),
        EncoderParams::Lif { delta, taus } => encode_lif(tf, *delta, taus),
        EncoderParams::Bsa {
            filter_taps,
            threshold,
        } => encode_bsa(tf, filter_taps, *threshold),
    }
}

/// Unit-sum raised-cosine windowed-sinc low-pass for BSA. Negative side
/// lobes are zeroed before rescaling so the kernel stays non-negative.
pub fn bsa_filter(cutoff_hz: f64, len: usize, frame_rate_hz: f64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::InvalidParameter("BSA filter length must be >= 1".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz <= frame_rate_hz / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "BSA cutoff must be in (0, {}] Hz, got {cutoff_hz}",
            frame_rate_hz / 2.0
        )));
    }
    let mut taps = dsp::windowed_sinc_lowpass(len, cutoff_hz / frame_rate_hz, LowpassWindow::RaisedCosine);
    taps.iter_mut().for_each(|t| *t = t.max(0.0));
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsaGrid {
    pub cutoff_hz_candidates: Vec<f64>,
    pub filter_len_candidates: Vec<usize>,
    pub threshold_candidates: Vec<f64>,
    pub subset_fraction: f64,
}

impl Default for BsaGrid {
    fn default() -> Self {
        Self {
            cutoff_hz_candidates: vec![10.0, 20.0, 50.0, 100.0],
            filter_len_candidates: vec![5, 11, 21],
            threshold_candidates: vec![0.0, 0.01, 0.05, 0.1],
            subset_fraction: 0.10,
        }
    }
}

impl BsaGrid {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff_hz_candidates.is_empty()
            || self.filter_len_candidates.is_empty()
            || self.threshold_candidates.is_empty()
        {
            return Err(Error::InvalidParameter("BSA grid lists must be non-empty".into()));
        }
        if !(self.subset_fraction > 0.0 && self.subset_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "subset fraction must be in (0, 1], got {}",
                self.subset_fraction
            )));
        }
        Ok(())
    }

    /// Grid points in enumeration order: cutoff-major, then length, then threshold.
    pub fn points(&self) -> impl Iterator<Item = (f64, usize, f64)> + '_ {
        self.cutoff_hz_candidates.iter().flat_map(move |&c| {
            self.filter_len_candidates.iter().flat_map(move |&l| {
                self.threshold_candidates.iter().map(move |&th| (c, l, th))
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsaChoice {
    pub cutoff_hz: f64,
    pub filter_len: usize,
    pub filter_taps: Vec<f64>,
    pub threshold: f64,
    pub snr_db: f64,
}

/// Picks utterance indices for the optimizer subset: `ceil(fraction * n)`
/// distinct indices drawn with a seeded ChaCha generator, in ascending order.
pub fn subset_indices(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let k = ((fraction * n as f64).ceil() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Grid search over BSA filter cutoff, filter length and threshold, scoring
/// each point by mean reconstruction SNR on a seeded subset of utterances.
///
/// Silent utterances are skipped when scoring. Ties keep the earliest point.
pub fn optimize_bsa(training: &[TfRepresentation], grid: &BsaGrid, seed: u64) -> Result<BsaChoice> {
    grid.validate()?;
    let subset: Vec<&TfRepresentation> = subset_indices(training.len(), grid.subset_fraction, seed)
        .into_iter()
        .map(|i| &training[i])
        .filter(|tf| tf.values().iter().any(|&v| v != 0.0))
        .collect();
    if subset.is_empty() {
        return Err(Error::Empty("BSA optimization subset"));
    }
    let frame_rate = subset[0].frame_rate_hz();

    let mut best: Option<BsaChoice> = None;
    for (cutoff_hz, filter_len, threshold) in grid.points() {
        let taps = bsa_filter(cutoff_hz, filter_len, frame_rate)?;
        let mut total = 0.0;
        for tf in &subset {
            let spikes = encode_bsa(tf, &taps, threshold)?;
            let recon = decode_bsa(&spikes, &taps)?;
            total += snr(tf, &recon)?;
        }
        let mean = total / subset.len() as f64;
        log::debug!("bsa grid cutoff={cutoff_hz} len={filter_len} threshold={threshold}: {mean:.3} dB");
        if best.as_ref().map_or(true, |b| mean > b.snr_db) {
            best = Some(BsaChoice {
                cutoff_hz,
                filter_len,
                filter_taps: taps,
                threshold,
                snr_db: mean,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}
