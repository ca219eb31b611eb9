use thiserror::Error;

use crate::types::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal too short: {samples} samples, need at least {required}")]
    SignalTooShort { samples: usize, required: usize },

    #[error("shape mismatch: {left_channels}x{left_frames} vs {right_channels}x{right_frames}")]
    ShapeMismatch {
        left_channels: usize,
        left_frames: usize,
        right_channels: usize,
        right_frames: usize,
    },

    #[error("{channels}x{frames} exceeds target shape {target_channels}x{target_frames}")]
    ExceedsTargetShape {
        channels: usize,
        frames: usize,
        target_channels: usize,
        target_frames: usize,
    },

    #[error("address space exceeded: channel {0} does not fit the 6-bit AER address (max 62)")]
    AddressSpaceExceeded(usize),

    #[error("invalid spike train: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSpikeTrain(Vec<Violation>),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated input at byte offset {offset}: {what}")]
    Truncated { offset: usize, what: &'static str },

    #[error("event count mismatch: header declares {declared}, payload holds {found}")]
    EventCountMismatch { declared: u32, found: u32 },

    #[error("malformed stream at byte offset {offset}: {what}")]
    Malformed { offset: usize, what: String },

    #[error("zero-energy reference signal: SNR is undefined")]
    ZeroEnergy,

    #[error("spike train has zero source frames")]
    ZeroFrames,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("mixed configurations in aggregate: {0}")]
    MixedConfigurations(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
