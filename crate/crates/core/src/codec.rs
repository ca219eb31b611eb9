//! AER serialization, spike-to-real decoding and classifier tensor export.
//!
//! # AER stream layout (all integers little-endian)
//!
//! | offset | size | field                                       |
//! |--------|------|---------------------------------------------|
//! | 0      | 4    | magic `"AER1"`                              |
//! | 4      | 1    | version (1)                                 |
//! | 5      | 1    | logical channel count (<= 62)               |
//! | 6      | 4    | tick length in ns                           |
//! | 10     | 4    | spike count (wrap markers excluded)         |
//! | 14     | 1    | channel layout (0 unipolar, 1 on, 2 off, 3 on/off) |
//! | 15     | 1    | source channel count                        |
//! | 16     | 4    | source frame count                          |
//! | 20     | 8    | frame rate in Hz, IEEE-754 f64              |
//! | 28     | 2·n  | payload words                               |
//!
//! Each payload word packs `address << 10 | delta_ticks`. Deltas are taken
//! from the previous word's tick (the first from tick 0). Address 63 is a
//! wrap marker that advances time by 1023 ticks without a spike.
//!
//! # Tensor file layout
//!
//! Magic `"SPKT"`, one rank byte, `rank` u32 dimensions, then the row-major
//! f32 payload.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{
    validate_spike_train, ChannelLayout, SpikeEvent, SpikeTrainSet, TfKind, TfRepresentation,
};

pub const AER_MAGIC: [u8; 4] = *b"AER1";
pub const AER_VERSION: u8 = 1;
pub const AER_HEADER_LEN: usize = 28;
pub const WRAP_ADDRESS: u16 = 63;
pub const MAX_DELTA: u64 = 1023;
pub const MAX_LOGICAL_CHANNELS: usize = 62;
/// 1 ms.
pub const DEFAULT_TICK_NS: u32 = 1_000_000;
/// 1/16 ms, used for TTFS sub-frame times.
pub const TTFS_TICK_NS: u32 = 62_500;

pub const TENSOR_MAGIC: [u8; 4] = *b"SPKT";

/// Round-half-up quantization of a time in seconds onto the tick grid.
pub fn quantize_ticks(time_s: f64, tick_ns: u32) -> u64 {
    (time_s * 1e9 / tick_ns as f64 + 0.5).floor() as u64
}

pub fn ticks_to_seconds(ticks: u64, tick_ns: u32) -> f64 {
    (ticks as u128 * tick_ns as u128) as f64 / 1e9
}

/// Serializes a spike train. Identical input always yields identical bytes.
pub fn to_aer(s: &SpikeTrainSet, tick_ns: u32) -> Result<Vec<u8>> {
    if tick_ns == 0 {
        return Err(Error::InvalidParameter("tick length must be positive".into()));
    }
    if let Some(e) = s.events.iter().find(|e| e.channel >= WRAP_ADDRESS as usize) {
        return Err(Error::AddressSpaceExceeded(e.channel));
    }
    if s.num_logical_channels > MAX_LOGICAL_CHANNELS {
        return Err(Error::AddressSpaceExceeded(s.num_logical_channels - 1));
    }
    let violations = validate_spike_train(s);
    if !violations.is_empty() {
        return Err(Error::InvalidSpikeTrain(violations));
    }
    let source_frames = u32::try_from(s.source_frames)
        .map_err(|_| Error::InvalidParameter("source frame count exceeds u32".into()))?;
    let event_count = u32::try_from(s.events.len())
        .map_err(|_| Error::InvalidParameter("event count exceeds u32".into()))?;

    let mut quantized: Vec<(u64, u16)> = s
        .events
        .iter()
        .map(|e| (quantize_ticks(e.time_s, tick_ns), e.channel as u16))
        .collect();
    // off-grid times can collapse onto one tick; keep the channel tie-break
    quantized.sort_by_key(|&(tick, ch)| (tick, ch));

    let mut out = Vec::with_capacity(AER_HEADER_LEN + 2 * quantized.len());
    out.extend_from_slice(&AER_MAGIC);
    out.push(AER_VERSION);
    out.push(s.num_logical_channels as u8);
    out.extend_from_slice(&tick_ns.to_le_bytes());
    out.extend_from_slice(&event_count.to_le_bytes());
    out.push(s.layout.to_byte());
    out.push(s.source_channels as u8);
    out.extend_from_slice(&source_frames.to_le_bytes());
    out.extend_from_slice(&s.frame_rate_hz.to_le_bytes());

    let mut last = 0u64;
    for (tick, ch) in quantized {
        let mut delta = tick - last;
        while delta > MAX_DELTA {
            out.extend_from_slice(&(WRAP_ADDRESS << 10 | MAX_DELTA as u16).to_le_bytes());
            delta -= MAX_DELTA;
        }
        out.extend_from_slice(&(ch << 10 | delta as u16).to_le_bytes());
        last = tick;
    }
    Ok(out)
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses the header only, returning `(tick_ns, event_count)`.
pub fn aer_header(bytes: &[u8]) -> Result<(u32, u32)> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "magic",
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != AER_MAGIC {
        return Err(Error::BadMagic {
            expected: AER_MAGIC,
            found,
        });
    }
    if bytes.len() < AER_HEADER_LEN {
        return Err(Error::Truncated {
            offset: bytes.len(),
            what: "header",
        });
    }
    if bytes[4] != AER_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    Ok((read_u32(bytes, 6), read_u32(bytes, 10)))
}

/// Inverse of [`to_aer`] up to tick quantization.
pub fn from_aer(bytes: &[u8]) -> Result<SpikeTrainSet> {
    let (tick_ns, declared) = aer_header(bytes)?;
    if tick_ns == 0 {
        return Err(Error::Malformed {
            offset: 6,
            what: "zero tick length".into(),
        });
    }
    let num_logical = bytes[5] as usize;
    let layout = ChannelLayout::from_byte(bytes[14]).ok_or_else(|| Error::Malformed {
        offset: 14,
        what: format!("unknown channel layout {}", bytes[14]),
    })?;
    let source_channels = bytes[15] as usize;
    if layout.logical_channels(source_channels) != num_logical {
        return Err(Error::Malformed {
            offset: 5,
            what: format!(
                "{num_logical} logical channels inconsistent with layout over {source_channels} sources"
            ),
        });
    }
    let source_frames = read_u32(bytes, 16) as usize;
    let frame_rate_hz = f64::from_le_bytes(bytes[20..28].try_into().unwrap());

    let mut events = Vec::with_capacity(declared as usize);
    let mut tick = 0u64;
    let mut offset = AER_HEADER_LEN;
    let mut found = 0u32;
    while offset < bytes.len() || found < declared {
        if offset + 2 > bytes.len() {
            return Err(Error::Truncated {
                offset,
                what: "payload word",
            });
        }
        let word = u16::from_le_bytes([bytes[offset], bytes[offset + 1]]);
        let address = word >> 10;
        let delta = (word & 0x3ff) as u64;
        if address == WRAP_ADDRESS {
            if delta != MAX_DELTA {
                return Err(Error::Malformed {
                    offset,
                    what: format!("wrap marker with delta {delta}"),
                });
            }
            tick += MAX_DELTA;
        } else {
            tick += delta;
            if address as usize >= num_logical {
                return Err(Error::Malformed {
                    offset,
                    what: format!("address {address} outside {num_logical} channels"),
                });
            }
            if found < declared {
                let channel = address as usize;
                events.push(SpikeEvent::new(
                    channel,
                    layout.polarity_of(channel, source_channels),
                    ticks_to_seconds(tick, tick_ns),
                ));
            }
            found += 1;
        }
        offset += 2;
    }
    if found != declared {
        return Err(Error::EventCountMismatch { declared, found });
    }
    Ok(SpikeTrainSet::from_unsorted(
        events,
        layout,
        source_channels,
        source_frames,
        frame_rate_hz,
    ))
}

/// Frame index of an event time. Times that land within 1e-9 frames of an
/// integer snap to it; a spike exactly at the end of the last frame folds
/// into that frame; later spikes are dropped.
fn frame_of(time_s: f64, frame_rate_hz: f64, frames: usize) -> Option<usize> {
    let x = time_s * frame_rate_hz;
    let nearest = x.round();
    let idx = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.floor()
    };
    if idx < 0.0 {
        return None;
    }
    let idx = idx as usize;
    if idx < frames {
        Some(idx)
    } else if idx == frames && frames > 0 {
        Some(frames - 1)
    } else {
        None
    }
}

/// Per-channel spike counts on the frame grid.
pub fn bin_spikes(s: &SpikeTrainSet) -> Vec<Vec<u32>> {
    let frames = s.source_frames;
    let mut counts = vec![vec![0u32; frames]; s.num_logical_channels];
    for e in &s.events {
        if let Some(t) = frame_of(e.time_s, s.frame_rate_hz, frames) {
            if e.channel < counts.len() {
                counts[e.channel][t] += 1;
            }
        }
    }
    counts
}

pub const DECODER_TAPS: usize = 5;

/// Bins spikes into frames and applies a causal 5-tap moving average with
/// gain 1/5 per channel. Output has one row per logical channel.
pub fn decode_spikes(s: &SpikeTrainSet) -> TfRepresentation {
    let frames = s.source_frames;
    let mut values = Vec::with_capacity(s.num_logical_channels * frames);
    for counts in bin_spikes(s) {
        let mut window = 0u32;
        for n in 0..frames {
            window += counts[n];
            if n >= DECODER_TAPS {
                window -= counts[n - DECODER_TAPS];
            }
            values.push(window as f64 / DECODER_TAPS as f64);
        }
    }
    TfRepresentation::new(
        values,
        s.num_logical_channels,
        frames,
        s.frame_rate_hz,
        Vec::new(),
        TfKind::Decoded,
    )
    .expect("decoder output shape is consistent")
}

/// Linear stimulus reconstruction: spike indicator convolved with the taps,
/// truncated to the frame count.
pub fn decode_bsa(s: &SpikeTrainSet, filter_taps: &[f64]) -> Result<TfRepresentation> {
    if filter_taps.is_empty() {
        return Err(Error::InvalidParameter("empty BSA filter".into()));
    }
    let frames = s.source_frames;
    let mut values = vec![0.0; s.num_logical_channels * frames];
    for (c, counts) in bin_spikes(s).into_iter().enumerate() {
        let row = &mut values[c * frames..(c + 1) * frames];
        for (t, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                for (k, &h) in filter_taps.iter().enumerate().take(frames - t) {
                    row[t + k] += h;
                }
            }
        }
    }
    TfRepresentation::new(
        values,
        s.num_logical_channels,
        frames,
        s.frame_rate_hz,
        Vec::new(),
        TfKind::Decoded,
    )
}

pub const CLASSIFIER_CHANNELS: usize = 64;

/// Zero-pads channels and frames up to the target shape, original block at
/// the top-left.
pub fn pad_for_classifier(
    tf: &TfRepresentation,
    target_channels: usize,
    target_frames: usize,
) -> Result<TfRepresentation> {
    if tf.num_channels() > target_channels || tf.num_frames() > target_frames {
        return Err(Error::ExceedsTargetShape {
            channels: tf.num_channels(),
            frames: tf.num_frames(),
            target_channels,
            target_frames,
        });
    }
    let mut values = vec![0.0; target_channels * target_frames];
    for (c, row) in tf.channels().enumerate() {
        values[c * target_frames..c * target_frames + row.len()].copy_from_slice(row);
    }
    TfRepresentation::new(
        values,
        target_channels,
        target_frames,
        tf.frame_rate_hz(),
        tf.center_freqs_hz().to_vec(),
        TfKind::Decoded,
    )
}

/// Dense f32 tensor in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidParameter(format!(
                "dims {dims:?} need {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_tf(tf: &TfRepresentation) -> Self {
        Self {
            dims: vec![tf.num_channels(), tf.num_frames()],
            data: tf.values().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Stacks equally shaped tensors along a new leading axis.
    pub fn stack(items: &[Tensor]) -> Result<Self> {
        let first = items.first().ok_or(Error::Empty("tensor batch"))?;
        if items.iter().any(|t| t.dims != first.dims) {
            return Err(Error::InvalidParameter("batch members differ in shape".into()));
        }
        let mut dims = vec![items.len()];
        dims.extend_from_slice(&first.dims);
        let data = items.iter().flat_map(|t| t.data.iter().copied()).collect();
        Ok(Self { dims, data })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let rank = u8::try_from(self.dims.len())
            .map_err(|_| Error::InvalidParameter("tensor rank exceeds 255".into()))?;
        let mut out = Vec::with_capacity(5 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(&TENSOR_MAGIC);
        out.push(rank);
        for &d in &self.dims {
            let d = u32::try_from(d)
                .map_err(|_| Error::InvalidParameter("tensor dimension exceeds u32".into()))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 {
            return Err(Error::Truncated {
                offset: bytes.len(),
                what: "tensor header",
            });
        }
        let found: [u8; 4] = bytes[..4].try_into().unwrap();
        if found != TENSOR_MAGIC {
            return Err(Error::BadMagic {
                expected: TENSOR_MAGIC,
                found,
            });
        }
        let rank = bytes[4] as usize;
        let header = 5 + 4 * rank;
        if bytes.len() < header {
            return Err(Error::Truncated {
                offset: bytes.len(),
                what: "tensor dimensions",
            });
        }
        let dims: Vec<usize> = (0..rank).map(|i| read_u32(bytes, 5 + 4 * i) as usize).collect();
        let count: usize = dims.iter().product();
        let payload = &bytes[header..];
        if payload.len() != count * 4 {
            if payload.len() < count * 4 {
                return Err(Error::Truncated {
                    offset: bytes.len(),
                    what: "tensor payload",
                });
            }
            return Err(Error::Malformed {
                offset: header + count * 4,
                what: "trailing bytes after tensor payload".into(),
            });
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Writes a channels x frames TensorFile.
pub fn export_tensor(tf: &TfRepresentation, path: impl AsRef<Path>) -> Result<()> {
    Tensor::from_tf(tf).write(path)
}

pub fn import_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    Tensor::read(path)
}

pub fn write_aer(s: &SpikeTrainSet, tick_ns: u32, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_aer(s, tick_ns)?)?;
    Ok(())
}

pub fn read_aer(path: impl AsRef<Path>) -> Result<SpikeTrainSet> {
    from_aer(&fs::read(path)?)
}
