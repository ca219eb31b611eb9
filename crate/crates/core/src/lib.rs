//! Spike encoding of audio for neuromorphic front-ends.
//!
//! Pipeline: [`features`] turns audio into a 24-channel, 1 kHz
//! time-frequency representation, [`normalize`] scales it to `[0, 1]`,
//! [`encoders`] converts each channel into spikes (SOD, TTFS, LIF, BSA),
//! [`codec`] serializes spikes as 16-bit AER words and decodes them back to
//! real values, and [`metrics`] measures density, SNR and bit compression.

pub mod codec;
pub mod dsp;
pub mod encoders;
pub mod error;
pub mod features;
pub mod metrics;
pub mod normalize;
pub mod sweep;
pub mod types;

pub use error::{Error, Result};
pub use features::Frontend;
pub use types::{
    validate_spike_train, AudioSignal, ChannelLayout, EncoderParams, LifTauMap, LifTaus, Polarity,
    SodMode, SpikeEvent, SpikeTrainSet, TfKind, TfRepresentation, Violation,
};
