//! Domain types shared by the front-ends, encoders, codec and metrics.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Mono sample buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TfKind {
    Spectrogram,
    Cochleagram,
    Decoded,
}

/// Channels x frames real matrix, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TfRepresentation {
    values: Vec<f64>,
    num_channels: usize,
    num_frames: usize,
    frame_rate_hz: f64,
    center_freqs_hz: Vec<f64>,
    kind: TfKind,
}

impl TfRepresentation {
    pub fn new(
        values: Vec<f64>,
        num_channels: usize,
        num_frames: usize,
        frame_rate_hz: f64,
        center_freqs_hz: Vec<f64>,
        kind: TfKind,
    ) -> Result<Self> {
        if values.len() != num_channels * num_frames {
            return Err(Error::InvalidParameter(format!(
                "value buffer holds {} entries, expected {num_channels}x{num_frames}",
                values.len()
            )));
        }
        if !(frame_rate_hz > 0.0 && frame_rate_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "frame rate must be positive, got {frame_rate_hz}"
            )));
        }
        if kind != TfKind::Decoded && center_freqs_hz.len() != num_channels {
            return Err(Error::InvalidParameter(format!(
                "{} center frequencies for {num_channels} channels",
                center_freqs_hz.len()
            )));
        }
        Ok(Self {
            values,
            num_channels,
            num_frames,
            frame_rate_hz,
            center_freqs_hz,
            kind,
        })
    }

    /// Builds a matrix from per-channel rows. All rows must have equal length.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        frame_rate_hz: f64,
        center_freqs_hz: Vec<f64>,
        kind: TfKind,
    ) -> Result<Self> {
        let num_channels = rows.len();
        let num_frames = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_frames) {
            return Err(Error::InvalidParameter("ragged channel rows".into()));
        }
        let values = rows.into_iter().flatten().collect();
        Self::new(
            values,
            num_channels,
            num_frames,
            frame_rate_hz,
            center_freqs_hz,
            kind,
        )
    }

    pub fn zeros(
        num_channels: usize,
        num_frames: usize,
        frame_rate_hz: f64,
        center_freqs_hz: Vec<f64>,
        kind: TfKind,
    ) -> Result<Self> {
        Self::new(
            vec![0.0; num_channels * num_frames],
            num_channels,
            num_frames,
            frame_rate_hz,
            center_freqs_hz,
            kind,
        )
    }

    pub fn num_channels(&self) -> usize {
        self.num_channels
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn center_freqs_hz(&self) -> &[f64] {
        &self.center_freqs_hz
    }

    pub fn kind(&self) -> TfKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        let start = index * self.num_frames;
        &self.values[start..start + self.num_frames]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.num_channels).map(move |c| self.channel(c))
    }

    pub fn get(&self, channel: usize, frame: usize) -> f64 {
        self.values[channel * self.num_frames + frame]
    }

    pub fn duration_s(&self) -> f64 {
        self.num_frames as f64 / self.frame_rate_hz
    }

    /// Same metadata, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Self {
        Self {
            values: Vec::new(),
            num_channels: self.num_channels,
            num_frames: self.num_frames,
            frame_rate_hz: self.frame_rate_hz,
            center_freqs_hz: self.center_freqs_hz.clone(),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    On,
    Off,
    Unipolar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub channel: usize,
    pub polarity: Polarity,
    pub time_s: f64,
}

impl SpikeEvent {
    pub fn new(channel: usize, polarity: Polarity, time_s: f64) -> Self {
        Self {
            channel,
            polarity,
            time_s,
        }
    }

    /// Total order on (time, channel) used for every stored train.
    pub fn order(&self, other: &Self) -> Ordering {
        self.time_s
            .total_cmp(&other.time_s)
            .then(self.channel.cmp(&other.channel))
    }
}

/// How logical addresses map onto source channels and polarities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelLayout {
    /// One train per source channel, no polarity (TTFS, LIF, BSA).
    Unipolar,
    /// SOD increases only.
    OnOnly,
    /// SOD decreases only.
    OffOnly,
    /// Full SOD: ON trains at `0..C`, OFF trains at `C..2C`.
    OnOff,
}

impl ChannelLayout {
    pub fn logical_channels(self, source_channels: usize) -> usize {
        match self {
            ChannelLayout::OnOff => 2 * source_channels,
            _ => source_channels,
        }
    }

    pub fn polarity_of(self, channel: usize, source_channels: usize) -> Polarity {
        match self {
            ChannelLayout::Unipolar => Polarity::Unipolar,
            ChannelLayout::OnOnly => Polarity::On,
            ChannelLayout::OffOnly => Polarity::Off,
            ChannelLayout::OnOff if channel < source_channels => Polarity::On,
            ChannelLayout::OnOff => Polarity::Off,
        }
    }

    pub(crate) fn to_byte(self) -> u8 {
        match self {
            ChannelLayout::Unipolar => 0,
            ChannelLayout::OnOnly => 1,
            ChannelLayout::OffOnly => 2,
            ChannelLayout::OnOff => 3,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0 => ChannelLayout::Unipolar,
            1 => ChannelLayout::OnOnly,
            2 => ChannelLayout::OffOnly,
            3 => ChannelLayout::OnOff,
            _ => return None,
        })
    }
}

/// Spike events sorted by `(time, channel)` plus the dimensions of the
/// representation they were encoded from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrainSet {
    pub events: Vec<SpikeEvent>,
    pub num_logical_channels: usize,
    pub layout: ChannelLayout,
    pub source_channels: usize,
    pub source_frames: usize,
    pub frame_rate_hz: f64,
}

impl SpikeTrainSet {
    /// Sorts `events` into canonical order.
    pub fn from_unsorted(
        mut events: Vec<SpikeEvent>,
        layout: ChannelLayout,
        source_channels: usize,
        source_frames: usize,
        frame_rate_hz: f64,
    ) -> Self {
        events.sort_by(SpikeEvent::order);
        Self {
            events,
            num_logical_channels: layout.logical_channels(source_channels),
            layout,
            source_channels,
            source_frames,
            frame_rate_hz,
        }
    }

    pub fn empty(
        layout: ChannelLayout,
        source_channels: usize,
        source_frames: usize,
        frame_rate_hz: f64,
    ) -> Self {
        Self::from_unsorted(
            Vec::new(),
            layout,
            source_channels,
            source_frames,
            frame_rate_hz,
        )
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.source_frames as f64 / self.frame_rate_hz
    }

    /// Events on one logical channel, in time order.
    pub fn channel_events(&self, channel: usize) -> impl Iterator<Item = &SpikeEvent> {
        self.events.iter().filter(move |e| e.channel == channel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSorted { index: usize },
    ChannelOutOfRange { index: usize, channel: usize },
    NegativeTime { index: usize },
    NonFiniteTime { index: usize },
    TimeBeyondDuration { index: usize, time_s: f64 },
    PolarityMismatch { index: usize },
    ChannelCountMismatch { declared: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSorted { index } => write!(f, "not sorted at event {index}"),
            Violation::ChannelOutOfRange { index, channel } => {
                write!(f, "channel out of range at event {index} (channel {channel})")
            }
            Violation::NegativeTime { index } => write!(f, "negative time at event {index}"),
            Violation::NonFiniteTime { index } => write!(f, "non-finite time at event {index}"),
            Violation::TimeBeyondDuration { index, time_s } => {
                write!(f, "time {time_s} s beyond duration at event {index}")
            }
            Violation::PolarityMismatch { index } => {
                write!(f, "polarity does not match channel layout at event {index}")
            }
            Violation::ChannelCountMismatch { declared, expected } => write!(
                f,
                "declares {declared} logical channels, layout implies {expected}"
            ),
        }
    }
}

/// Tolerance on the end-of-utterance bound; TTFS may place a spike exactly
/// at the duration boundary.
const DURATION_SLACK: f64 = 1e-9;

/// Collects every invariant violation; an empty vector means the set is valid.
pub fn validate_spike_train(s: &SpikeTrainSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let expected = s.layout.logical_channels(s.source_channels);
    if s.num_logical_channels != expected {
        out.push(Violation::ChannelCountMismatch {
            declared: s.num_logical_channels,
            expected,
        });
    }
    let duration = s.duration_s();
    for (index, e) in s.events.iter().enumerate() {
        if e.channel >= s.num_logical_channels {
            out.push(Violation::ChannelOutOfRange {
                index,
                channel: e.channel,
            });
        }
        if !e.time_s.is_finite() {
            out.push(Violation::NonFiniteTime { index });
        } else if e.time_s < 0.0 {
            out.push(Violation::NegativeTime { index });
        } else if e.time_s > duration + DURATION_SLACK {
            out.push(Violation::TimeBeyondDuration {
                index,
                time_s: e.time_s,
            });
        }
        if e.polarity != s.layout.polarity_of(e.channel, s.source_channels) {
            out.push(Violation::PolarityMismatch { index });
        }
        if index > 0 && s.events[index - 1].order(e) == Ordering::Greater {
            out.push(Violation::NotSorted { index });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SodMode {
    Full,
    OnOnly,
    OffOnly,
}

impl SodMode {
    pub fn layout(self) -> ChannelLayout {
        match self {
            SodMode::Full => ChannelLayout::OnOff,
            SodMode::OnOnly => ChannelLayout::OnOnly,
            SodMode::OffOnly => ChannelLayout::OffOnly,
        }
    }
}

/// Linear map from reciprocal center frequency into `[tau_min_s, tau_max_s]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifTauMap {
    pub tau_min_s: f64,
    pub tau_max_s: f64,
}

impl Default for LifTauMap {
    fn default() -> Self {
        Self {
            tau_min_s: 0.020,
            tau_max_s: 0.040,
        }
    }
}

impl LifTauMap {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_min_s > 0.0 && self.tau_min_s < self.tau_max_s) {
            return Err(Error::InvalidParameter(format!(
                "tau range must satisfy 0 < min < max, got [{}, {}]",
                self.tau_min_s, self.tau_max_s
            )));
        }
        Ok(())
    }

    /// Per-channel time constants, decreasing with frequency. Channels at
    /// 0 Hz (the spectrogram DC bin) get `tau_max_s`.
    pub fn taus(&self, center_freqs_hz: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        let positive = center_freqs_hz.iter().copied().filter(|f| *f > 0.0);
        let f_min = positive.clone().fold(f64::INFINITY, f64::min);
        let f_max = positive.fold(0.0, f64::max);
        let span = 1.0 / f_min - 1.0 / f_max;
        Ok(center_freqs_hz
            .iter()
            .map(|&f| {
                if f <= 0.0 || !(span > 0.0) {
                    self.tau_max_s
                } else {
                    let w = (1.0 / f - 1.0 / f_max) / span;
                    self.tau_min_s + (self.tau_max_s - self.tau_min_s) * w
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LifTaus {
    FrequencyMap(LifTauMap),
    Explicit(Vec<f64>),
}

impl LifTaus {
    pub fn resolve(&self, center_freqs_hz: &[f64]) -> Result<Vec<f64>> {
        match self {
            LifTaus::FrequencyMap(map) => map.taus(center_freqs_hz),
            LifTaus::Explicit(taus) => {
                if taus.len() != center_freqs_hz.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} time constants for {} channels",
                        taus.len(),
                        center_freqs_hz.len()
                    )));
                }
                if taus.iter().any(|t| !(*t > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "time constants must be positive".into(),
                    ));
                }
                Ok(taus.clone())
            }
        }
    }
}

/// Parameter set for one encoder.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderParams {
    Sod { delta: f64, mode: SodMode },
    Ttfs { delta: f64 },
    Lif { delta: f64, taus: LifTaus },
    Bsa { filter_taps: Vec<f64>, threshold: f64 },
}

impl EncoderParams {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderParams::Sod {
                mode: SodMode::Full,
                ..
            } => "sod",
            EncoderParams::Sod {
                mode: SodMode::OnOnly,
                ..
            } => "sod_on",
            EncoderParams::Sod {
                mode: SodMode::OffOnly,
                ..
            } => "sod_off",
            EncoderParams::Ttfs { .. } => "ttfs",
            EncoderParams::Lif { .. } => "lif",
            EncoderParams::Bsa { .. } => "bsa",
        }
    }

    /// Default AER tick: TTFS carries sub-frame times.
    pub fn default_tick_ns(&self) -> u32 {
        match self {
            EncoderParams::Ttfs { .. } => crate::codec::TTFS_TICK_NS,
            _ => crate::codec::DEFAULT_TICK_NS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EncoderParams::Sod { delta, .. } | EncoderParams::Lif { delta, .. } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "threshold must be positive, got {delta}"
                    )));
                }
            }
            EncoderParams::Ttfs { delta } => {
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "TTFS threshold must lie in (0, 1), got {delta}"
                    )));
                }
            }
            EncoderParams::Bsa {
                filter_taps,
                threshold,
            } => {
                if filter_taps.is_empty() {
                    return Err(Error::InvalidParameter("empty BSA filter".into()));
                }
                if filter_taps.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
                    return Err(Error::InvalidParameter(
                        "BSA filter taps must be finite and non-negative".into(),
                    ));
                }
                if !(*threshold >= 0.0 && threshold.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "BSA threshold must be non-negative, got {threshold}"
                    )));
                }
            }
        }
        if let EncoderParams::Lif {
            taus: LifTaus::FrequencyMap(map),
            ..
        } = self
        {
            map.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn train(events: Vec<SpikeEvent>) -> SpikeTrainSet {
        SpikeTrainSet {
            events,
            num_logical_channels: 48,
            layout: ChannelLayout::OnOff,
            source_channels: 24,
            source_frames: 100,
            frame_rate_hz: 1000.0,
        }
    }

    #[test]
    fn empty_train_is_valid() {
        assert!(validate_spike_train(&train(vec![])).is_empty());
    }

    #[test]
    fn channel_48_of_48_is_out_of_range() {
        let v = validate_spike_train(&train(vec![SpikeEvent::new(48, Polarity::Off, 0.01)]));
        assert_eq!(
            v,
            vec![Violation::ChannelOutOfRange {
                index: 0,
                channel: 48
            }]
        );
        assert!(v[0].to_string().contains("channel out of range"));
    }

    #[test]
    fn out_of_order_events_are_flagged() {
        let v = validate_spike_train(&train(vec![
            SpikeEvent::new(1, Polarity::On, 0.02),
            SpikeEvent::new(1, Polarity::On, 0.01),
        ]));
        assert_eq!(v, vec![Violation::NotSorted { index: 1 }]);
        assert!(v[0].to_string().contains("not sorted"));
    }

    #[test]
    fn simultaneous_events_sort_by_channel() {
        let v = validate_spike_train(&train(vec![
            SpikeEvent::new(5, Polarity::On, 0.01),
            SpikeEvent::new(3, Polarity::On, 0.01),
        ]));
        assert_eq!(v, vec![Violation::NotSorted { index: 1 }]);
        let s = SpikeTrainSet::from_unsorted(
            vec![
                SpikeEvent::new(5, Polarity::On, 0.01),
                SpikeEvent::new(3, Polarity::On, 0.01),
            ],
            ChannelLayout::OnOff,
            24,
            100,
            1000.0,
        );
        assert_eq!(s.events[0].channel, 3);
    }

    #[test]
    fn negative_time_and_wrong_polarity() {
        let v = validate_spike_train(&train(vec![SpikeEvent::new(30, Polarity::On, -0.001)]));
        assert!(v.contains(&Violation::NegativeTime { index: 0 }));
        assert!(v.contains(&Violation::PolarityMismatch { index: 0 }));
    }

    #[test]
    fn tau_map_spans_range_and_clamps_dc() {
        let map = LifTauMap::default();
        let taus = map.taus(&[0.0, 200.0, 1000.0, 4600.0]).unwrap();
        assert_eq!(taus[0], 0.040);
        assert_eq!(taus[1], 0.040);
        assert!((taus[3] - 0.020).abs() < 1e-15);
        assert!(taus[1] > taus[2] && taus[2] > taus[3]);
    }

    #[test]
    fn encoder_params_reject_bad_thresholds() {
        assert!(EncoderParams::Sod {
            delta: 0.0,
            mode: SodMode::Full
        }
        .validate()
        .is_err());
        assert!(EncoderParams::Ttfs { delta: 1.0 }.validate().is_err());
        assert!(EncoderParams::Bsa {
            filter_taps: vec![],
            threshold: 0.1
        }
        .validate()
        .is_err());
        assert!(EncoderParams::Lif {
            delta: 0.1,
            taus: LifTaus::FrequencyMap(LifTauMap {
                tau_min_s: 0.04,
                tau_max_s: 0.02
            })
        }
        .validate()
        .is_err());
    }
}
